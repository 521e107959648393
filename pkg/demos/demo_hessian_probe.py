"""Why the outer problem needs a grid: the objective is not quasiconcave.

Evaluates the bordered-Hessian determinants of the revenue objective
over the false-alarm axis (vote threshold treated as continuous) at the
worked-example parameters. Quasiconcavity would need det[H] > 0
everywhere that det[H_a] < 0; the sign flip shows it fails.

Run:  python demos/demo_hessian_probe.py
"""

from cogalloc import HessianProbeConfig, quasiconcavity_probe

cfg = HessianProbeConfig()
print(
    f"worked example: M=k={cfg.m_users}, P(H0)={cfg.p_h0}, "
    f"gamma={cfg.gamma_db} dB, N={cfg.n_samples}"
)
print(f"idle rates {cfg.r0}\ninterfered rates {cfg.r1}\n")

points = quasiconcavity_probe(cfg)
print(" pfa    det[H]        det[H_a]")
for p in points:
    marker = "  <-- det[H] < 0" if p.det_h < 0 else ""
    print(f" {p.pfa:4.2f}  {p.det_h:+12.5e}  {p.det_ha:+12.5e}{marker}")

negatives = [p.pfa for p in points if p.det_h < 0]
print(
    f"\ndet[H] goes negative on {len(negatives)}/{len(points)} grid points "
    f"(first at pfa={negatives[0] if negatives else None}); "
    "the objective is not quasiconcave, so the design search stays on a grid."
)
