#pragma once

#include "gftransfer/density_ratio.hpp"
#include "gftransfer/error.hpp"
#include "gftransfer/experiment.hpp"
#include "gftransfer/experiment_io.hpp"
#include "gftransfer/graph.hpp"
#include "gftransfer/gwss.hpp"
#include "gftransfer/io.hpp"
#include "gftransfer/random.hpp"
#include "gftransfer/recovery.hpp"
#include "gftransfer/spectral.hpp"
#include "gftransfer/spectral_fit.hpp"
#include "gftransfer/transfer.hpp"
