#pragma once

#include "detctl/analysis.hpp"
#include "detctl/dynamics.hpp"
#include "detctl/errors.hpp"
#include "detctl/field.hpp"
#include "detctl/grid.hpp"
#include "detctl/interpolants.hpp"
#include "detctl/oracle.hpp"
#include "detctl/random.hpp"
#include "detctl/transform.hpp"
