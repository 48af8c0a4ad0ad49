// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synthpose/body_model.hpp"

#include <cstdint>
#include <string>

namespace synthpose {

/// Vertical chain of `joints` box segments (8 vertices each, so M = 8K) with
/// two shape coefficients (height, girth). The default K = 4 gives M = 32.
BodyModel make_chain_body(int joints = 4, double segment_length = 0.3, double half_width = 0.08);

/// Eleven-joint stick humanoid built from boxes, standing on y = 0 with +y up.
BodyModel make_toy_humanoid();

/// Joint names of make_toy_humanoid().
const std::vector<std::string>& toy_humanoid_joint_names();

/// Procedural motion for the toy humanoid. Supported actions: "run",
/// "swing", "jump", "throw". Betas jitter per frame around a subject-specific
/// mean so that shape normalization has something to do.
MotionSequence make_toy_motion(const BodyModel& model, const std::string& action, int frames,
                               const std::string& subject_id, std::uint64_t seed);

}  // namespace synthpose
