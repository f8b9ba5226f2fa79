"""Low levels at beta = 1 and the diagonal Pade sequence converging to them.

Run with ``python demos/spectrum_and_pade.py``.
"""

from cubic_lab.model import CutParameter
from cubic_lab.pade import build_pade, evaluate_complex
from cubic_lab.rs_series import rs_coefficients
from cubic_lab.spectrum import levels


def main():
    beta = CutParameter(1.0)
    lvs = levels(beta, 3, tol=1e-11)
    print("n  E_n(1)                nodes  basis")
    for lv in lvs:
        print(f"{lv.n}  {lv.energy.real:.15f}  {lv.node_count:5d}  {lv.N:5d}")

    print("\nrelative error of the [j/j] approximant at beta = 1")
    print("j   " + "".join(f"n={n:<12d}" for n in range(3)))
    series = [rs_coefficients(n) for n in range(3)]
    for j in (2, 4, 6, 8, 10, 12):
        errs = []
        for s, lv in zip(series, lvs):
            E = lv.energy.real
            errs.append(abs(evaluate_complex(build_pade(s, j), beta) - E) / E)
        print(f"{j:<4d}" + "".join(f"{e:<14.3e}" for e in errs))

    s = rs_coefficients(0, 4)
    print("\nfirst coefficients e_{0,k}:", ", ".join(str(s[k]) for k in range(1, 5)))


if __name__ == "__main__":
    main()
