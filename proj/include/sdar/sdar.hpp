#pragma once

#include "sdar/data_ingest.hpp"
#include "sdar/forecasting.hpp"
#include "sdar/io.hpp"
#include "sdar/model.hpp"
#include "sdar/numeric.hpp"
#include "sdar/optimizer.hpp"
#include "sdar/persistence.hpp"
#include "sdar/qml.hpp"
#include "sdar/rng.hpp"
#include "sdar/setar.hpp"

namespace sdar {
inline constexpr const char* kVersion = "0.1.0";
}
