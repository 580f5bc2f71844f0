"""Print the term-by-term drift objective across a rho ladder.

Shows how the soliton energy term A, the smoother cost B and the cross and
event corrections C, D, E compare as rho shrinks, together with the fitted
slope of log(-total) against log(1/rho).

    python3 scripts/drift_terms.py --p 8 --K 3 --alpha 1.1767
    python3 scripts/drift_terms.py --p 6 --K-over-mass 1.5 --convention twopi
"""

import argparse

from focusing_gibbs.gns_ground_state import GnsParameters, solve_ground_state
from focusing_gibbs.rng import SampleStream
from focusing_gibbs.spectral_core import Convention, SpectralGrid
from focusing_gibbs.variational_lab import build_soliton_drift, divergence_rate_fit, objective_breakdown


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--p", type=float, default=8.0)
    parser.add_argument("--K", type=float)
    parser.add_argument("--K-over-mass", type=float)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--eta", type=float)
    parser.add_argument("--convention", choices=("twopi", "plain"), default="plain")
    parser.add_argument("--rho-inv", type=int, nargs="+", default=[8, 16, 32, 64])
    parser.add_argument("--samples", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    conv = Convention(args.convention)
    prof = solve_ground_state(GnsParameters(1, 1.0, args.p))
    mass = prof.mass_in(conv)
    K = args.K if args.K is not None else (args.K_over_mass or 1.5) * mass
    eta = args.eta
    if eta is None and args.alpha is not None:
        eta = K - args.alpha * mass
    print(f"p={args.p:g} K={K:.6g} ||Q||={mass:.6g} convention={conv.value}")
    print(f"{'1/rho':>6} {'A':>12} {'B':>12} {'C':>12} {'D':>12} {'E':>12} {'total':>12} {'A1':>8}")
    breakdowns = []
    for inv in args.rho_inv:
        grid = SpectralGrid(1, 32 * inv, 1.0, conv)
        drift = build_soliton_drift(1, 1.0, args.p, K, 1 / inv, 0.05, prof, grid, alpha=args.alpha, eta=eta)
        b = objective_breakdown(drift, inv, args.samples, SampleStream(args.seed, f"rho=1/{inv}"))
        breakdowns.append(b)
        print(f"{inv:6d} {b.A:12.5g} {b.B:12.5g} {b.C:12.5g} {b.D:12.5g} {b.E:12.5g} {b.total:12.5g} "
              f"{drift.A1:8.4f}", flush=True)
    try:
        fit = divergence_rate_fit(breakdowns)
        print(f"slope {fit.slope:.4f}, target {fit.target:g}, relative error {fit.relative_error:.3f}")
    except ValueError as exc:
        print(exc)


if __name__ == "__main__":
    main()
