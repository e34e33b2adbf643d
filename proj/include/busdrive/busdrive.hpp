#pragma once

#include "baselines.hpp"
#include "batch.hpp"
#include "dispatch.hpp"
#include "formulations.hpp"
#include "generator.hpp"
#include "instance.hpp"
#include "network.hpp"
#include "parallel.hpp"
#include "schedule.hpp"
#include "sensing.hpp"
