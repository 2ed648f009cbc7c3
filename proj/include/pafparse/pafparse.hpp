#pragma once

#include "pafparse/core.hpp"
#include "pafparse/topology.hpp"
#include "pafparse/groundtruth.hpp"
#include "pafparse/detection.hpp"
#include "pafparse/association.hpp"
#include "pafparse/matching.hpp"
#include "pafparse/assembly.hpp"
#include "pafparse/synth.hpp"
#include "pafparse/eval.hpp"
#include "pafparse/io.hpp"
#include "pafparse/bench.hpp"
