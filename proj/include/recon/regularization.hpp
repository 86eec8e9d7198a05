#pragma once

#include "recon/types.hpp"

namespace recon::reg {

enum class Coupling { l2, l1 };

// Forward difference along the motion-state axis, d(t) = u(t+1) - u(t), with
// d(T-1) = 0. Motion states are not cyclic (end-expiration to
// end-inspiration), hence the Neumann boundary.
MotionResolvedImage temporal_diff(const MotionResolvedImage& u);

// Exact adjoint of temporal_diff: a(0) = -d(0), a(t) = d(t-1) - d(t) for
// interior t, a(T-1) = d(T-2).
MotionResolvedImage temporal_diff_adjoint(const MotionResolvedImage& d);

// Collaborative TV of the echo stack. l2: sum over (voxel, state) of the
// cross-echo root-sum-square of temporal differences; l1: plain sum of
// moduli (no coupling between echoes).
double vtv_value(const EchoStack& u, Coupling coupling);

// Duals of the TV term live in the same shape family as the echo stack.
using TvDual = EchoStack;

// Pointwise projection onto the dual ball of radius 1/lambda: joint
// cross-echo scaling in l2 mode, per-echo scaling in l1 mode. Exactly
// idempotent: re-projecting the result returns it bitwise unchanged.
TvDual project_dual(TvDual xi, double lambda, Coupling coupling);

}  // namespace recon::reg
