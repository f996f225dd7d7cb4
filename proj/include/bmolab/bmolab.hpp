#pragma once

#include "bmolab/denjoy.hpp"
#include "bmolab/error.hpp"
#include "bmolab/family.hpp"
#include "bmolab/index_set.hpp"
#include "bmolab/io.hpp"
#include "bmolab/measure.hpp"
#include "bmolab/model.hpp"
#include "bmolab/models.hpp"
#include "bmolab/numeric.hpp"
#include "bmolab/space.hpp"
#include "bmolab/structure.hpp"
#include "bmolab/suite.hpp"
#include "bmolab/weights.hpp"
