#pragma once

#include "polydepth/error.hpp"
#include "polydepth/mesh.hpp"
#include "polydepth/geometry.hpp"
#include "polydepth/bvh.hpp"
#include "polydepth/proximity.hpp"
#include "polydepth/ccd.hpp"
#include "polydepth/lcs.hpp"
#include "polydepth/pgs.hpp"
#include "polydepth/seeding.hpp"
#include "polydepth/pipeline.hpp"
#include "polydepth/oracle.hpp"
#include "polydepth/shapes.hpp"
#include "polydepth/scenario.hpp"
