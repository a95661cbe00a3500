#pragma once

#include "fpnet/activations.hpp"
#include "fpnet/dataio.hpp"
#include "fpnet/loss.hpp"
#include "fpnet/matrix.hpp"
#include "fpnet/metrics.hpp"
#include "fpnet/model_io.hpp"
#include "fpnet/network.hpp"
#include "fpnet/optimizer.hpp"
#include "fpnet/trainer.hpp"
