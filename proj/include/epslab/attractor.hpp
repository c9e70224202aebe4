#ifndef EPSLAB_ATTRACTOR_HPP
#define EPSLAB_ATTRACTOR_HPP

#include <cstdint>
#include <vector>

#include "epslab/dynamics.hpp"

namespace epslab {

struct EnsembleSpec {
    int members = 8;
    int modes = 4;        // low-mode content of the random initial data
    double amplitude = 1; // Z-ball radius R
    FlowKind kind = FlowKind::hyperbolic;
    double eps = 0.1;          // weights the velocity part of the Z norm
    double velocity_share = 1; // in [0,1]; cap on the v part of the Z budget.
                               // 0 samples layer-free data (v = 0), which
                               // keeps separatrix-close members on the same
                               // passage schedule across an eps ladder.
};

/// K seeded random low-mode states with |u|_H1^2 + eps |v|_L2^2 <= R^2
/// (rescaling enforced after sampling; the Z budget is split between the
/// two components so the u part does not depend on eps). Parabolic
/// ensembles consume the same draws and carry v = 0. Bit-identical for a
/// fixed seed.
std::vector<HyperbolicState> sample_ensemble(const DiscreteOperator& op,
                                             const EnsembleSpec& spec,
                                             std::uint64_t seed);

/// Pooled post-transient snapshots of an ensemble, the working stand-in for
/// the global attractor. Parabolic snapshots are lifted to (u, -A_h u + f(u))
/// pairs. Finite sampling biases the semidistance upward (conservative).
struct AttractorApproximation {
    std::vector<Snapshot> points;
    double eps = 0; // 0 marks a lifted parabolic set
    std::uint64_t seed = 0;
    double transient = 0;
    double window = 0;
    double dt = 0;
    int stride = 1;
    std::uint64_t grid_hash = 0;
    EnsembleSpec spec;
};

/// Integrates every member through [0, T0] and pools snapshots from
/// [T0, T0 + T_sample] at the given stride. Members run concurrently; a
/// diverging member aborts the whole approximation naming its index.
AttractorApproximation approximate_attractor(const DiscreteOperator& op,
                                             const Nonlinearity& nl,
                                             const EnsembleSpec& spec,
                                             std::uint64_t seed, double T0,
                                             double T_sample, double dt, int stride,
                                             int threads = 0);

/// sup over X of inf over Y of sqrt(|du|_H1^2 + |dv|_H-alpha^2). alpha = 1
/// and alpha = 0 run on the sparse paths; alpha in (0,1) needs the dense
/// eigensystem.
double semidistance(const DiscreteOperator& op, const AttractorApproximation& X,
                    const AttractorApproximation& Y, double alpha);

struct SweepConfig {
    std::vector<double> eps_ladder;
    int members = 32;
    int modes = 4;
    double amplitude = 2.0;
    double transient = 2.0;
    double window = 6.0;
    double dt = 1e-3;
    int stride = 50;
    int ref_stride = 0; // snapshot stride of the lifted limit set; 0 = stride
    double alpha = 1.0;
    double velocity_share = 0; // sweeps default to layer-free initial data
};

struct SweepRow {
    double eps = 0;
    double dist = 0;  // semidistance to the lifted limit set
    double sup_z = 0; // sup |u|_H1^2 + eps |v|_L2^2 over the set
};

struct SweepReport {
    std::vector<SweepRow> rows;
    double reference_sup_z = 0;
    AttractorApproximation reference;            // lifted limit set
    std::vector<AttractorApproximation> eps_sets;
};

/// Approximates the limit set once (lifted parabolic flow) and each
/// eps-attractor over the ladder, reporting semidistances and the uniform
/// Z-bound per rung.
SweepReport eps_sweep(const DiscreteOperator& op, const Nonlinearity& nl,
                      const SweepConfig& cfg, std::uint64_t seed, int threads = 0);

} // namespace epslab

#endif
