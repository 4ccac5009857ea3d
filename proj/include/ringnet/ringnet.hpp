#pragma once

#include "ringnet/adam.hpp"
#include "ringnet/autodiff.hpp"
#include "ringnet/bvh.hpp"
#include "ringnet/camera.hpp"
#include "ringnet/checkpoint.hpp"
#include "ringnet/config.hpp"
#include "ringnet/container.hpp"
#include "ringnet/dataset_io.hpp"
#include "ringnet/dense_array.hpp"
#include "ringnet/encoder.hpp"
#include "ringnet/error.hpp"
#include "ringnet/evaluation.hpp"
#include "ringnet/experiments.hpp"
#include "ringnet/grad_check.hpp"
#include "ringnet/head_model.hpp"
#include "ringnet/icp.hpp"
#include "ringnet/landmarks.hpp"
#include "ringnet/losses.hpp"
#include "ringnet/mesh.hpp"
#include "ringnet/mesh_io.hpp"
#include "ringnet/model_generator.hpp"
#include "ringnet/model_io.hpp"
#include "ringnet/parallel.hpp"
#include "ringnet/report.hpp"
#include "ringnet/ring_batch.hpp"
#include "ringnet/rotation.hpp"
#include "ringnet/similarity.hpp"
#include "ringnet/synth.hpp"
#include "ringnet/trainer.hpp"
