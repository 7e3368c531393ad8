#pragma once

#include <spolyak/concavity.hpp>
#include <spolyak/dataset_io.hpp>
#include <spolyak/diagnostics.hpp>
#include <spolyak/objectives.hpp>
#include <spolyak/optimizer.hpp>
#include <spolyak/parallel.hpp>
#include <spolyak/rng.hpp>
#include <spolyak/synthdata.hpp>
#include <spolyak/thresholding.hpp>
#include <spolyak/trace_io.hpp>
#include <spolyak/types.hpp>
