#pragma once

#include "agcfar/anomaly_sim.hpp"
#include "agcfar/arima.hpp"
#include "agcfar/cfar.hpp"
#include "agcfar/error.hpp"
#include "agcfar/garch.hpp"
#include "agcfar/io.hpp"
#include "agcfar/nelder_mead.hpp"
#include "agcfar/pipeline.hpp"
#include "agcfar/random.hpp"
#include "agcfar/series.hpp"
