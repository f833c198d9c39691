#pragma once

#include "stiffid/common.hpp"
#include "stiffid/compliance.hpp"
#include "stiffid/deflection.hpp"
#include "stiffid/field.hpp"
#include "stiffid/io.hpp"
#include "stiffid/pipeline.hpp"
#include "stiffid/rotation.hpp"
#include "stiffid/statistics.hpp"
#include "stiffid/studies.hpp"
#include "stiffid/synthetic.hpp"
