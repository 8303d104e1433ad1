#pragma once

#include "avsal/audio_descriptor.hpp"
#include "avsal/av_correlation.hpp"
#include "avsal/color.hpp"
#include "avsal/config.hpp"
#include "avsal/errors.hpp"
#include "avsal/filters.hpp"
#include "avsal/fusion.hpp"
#include "avsal/grid.hpp"
#include "avsal/media_io.hpp"
#include "avsal/metrics.hpp"
#include "avsal/optical_flow.hpp"
#include "avsal/pipeline.hpp"
#include "avsal/segmentation.hpp"
#include "avsal/synthetic.hpp"
#include "avsal/tracking.hpp"
#include "avsal/visual_saliency.hpp"
