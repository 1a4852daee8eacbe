#pragma once

#include "dynidx/advisor.hpp"
#include "dynidx/commands.hpp"
#include "dynidx/context.hpp"
#include "dynidx/costmodel.hpp"
#include "dynidx/miner.hpp"
#include "dynidx/persistence.hpp"
#include "dynidx/schema.hpp"
#include "dynidx/workload.hpp"
