#ifndef TOPOAUG_TOPOAUG_HPP
#define TOPOAUG_TOPOAUG_HPP

#include "topoaug/cct.hpp"
#include "topoaug/correction.hpp"
#include "topoaug/error.hpp"
#include "topoaug/json_io.hpp"
#include "topoaug/metric.hpp"
#include "topoaug/nifti.hpp"
#include "topoaug/phantom.hpp"
#include "topoaug/pipeline.hpp"
#include "topoaug/topology.hpp"
#include "topoaug/transform.hpp"
#include "topoaug/volume.hpp"

#endif
