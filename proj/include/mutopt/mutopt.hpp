#pragma once

#include "mutopt/source.hpp"
#include "mutopt/mutation.hpp"
#include "mutopt/minilang.hpp"
#include "mutopt/process.hpp"
#include "mutopt/backend.hpp"
#include "mutopt/optimizer.hpp"
#include "mutopt/report.hpp"
