#pragma once

#include "snipsde/data_model.hpp"
#include "snipsde/ensemble.hpp"
#include "snipsde/error.hpp"
#include "snipsde/eval.hpp"
#include "snipsde/model_io.hpp"
#include "snipsde/predictor.hpp"
#include "snipsde/reference_processes.hpp"
#include "snipsde/regression.hpp"
#include "snipsde/rng.hpp"
#include "snipsde/sde_recon.hpp"
#include "snipsde/snippet_synth.hpp"
#include "snipsde/version.hpp"
