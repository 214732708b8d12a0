#pragma once

#include "toboggan/config.hpp"
#include "toboggan/contour.hpp"
#include "toboggan/discrete.hpp"
#include "toboggan/error.hpp"
#include "toboggan/io.hpp"
#include "toboggan/metric.hpp"
#include "toboggan/model.hpp"
#include "toboggan/pipeline.hpp"
#include "toboggan/rational.hpp"
#include "toboggan/shoot.hpp"
#include "toboggan/spectra.hpp"
#include "toboggan/types.hpp"
