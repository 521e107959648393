"""Local and fused detection statistics, step by step.

Walks the closed-form chain from a false-alarm target to the fused
k-out-of-L decision probabilities: threshold recovery, the local
detection probability at a given sensing SNR, and the binomial fusion
tails, ending with the minimum cooperating-user count for a detection
floor.

Run:  python demos/demo_sensing_statistics.py
"""

from cogalloc import (
    SensingDesign,
    SensingGeometry,
    db_to_linear,
    global_pd,
    global_pfa,
    local_pd,
    min_active_users,
    threshold_from_pfa,
)

geom = SensingGeometry(gamma=db_to_linear(-7.0), n_samples=40)
print(f"sensing SNR {geom.gamma:.4f} (linear, -7 dB), {geom.n_samples} samples\n")

print("pfa -> energy threshold (noise floor = 1 W) -> local P_d")
for pfa in (0.05, 0.1, 0.3, 0.5):
    eps = threshold_from_pfa(pfa, geom)
    pd = local_pd(pfa, geom)
    print(f"  pfa={pfa:4.2f}  threshold={eps:.4f} W  P_d={pd:.4f}")

print("\nfused tails for pfa=0.1 at every vote threshold, L = 5 reporters")
design_rows = []
for k in range(1, 6):
    design = SensingDesign(0.1, k)
    design_rows.append((k, global_pfa(design, 5), global_pd(design, geom, 5)))
for k, pfa_g, pd_g in design_rows:
    print(f"  k={k}: P_FA={pfa_g:.4f}  P_D={pd_g:.4f}")

print("\ncooperation gain: P_D vs number of reporters (pfa=0.1, k=1)")
design = SensingDesign(0.1, 1)
for l_active in range(1, 8):
    print(f"  L={l_active}: P_D={global_pd(design, geom, l_active):.4f}")

zeta = 0.7
needed = min_active_users(design, geom, zeta, m_total=7)
print(f"\nminimum reporters for P_D >= {zeta}: {needed}")
