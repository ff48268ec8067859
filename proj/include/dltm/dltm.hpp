#pragma once

#include "dltm/archive.hpp"
#include "dltm/conditionals.hpp"
#include "dltm/config.hpp"
#include "dltm/corpus.hpp"
#include "dltm/diagnostics.hpp"
#include "dltm/dlm.hpp"
#include "dltm/forecast.hpp"
#include "dltm/gibbs.hpp"
#include "dltm/model.hpp"
#include "dltm/polya_gamma.hpp"
#include "dltm/rng.hpp"
#include "dltm/synth.hpp"
