"""Stieltjes density of the ground state on the cut and the identities it satisfies.

Samples ``rho_0(t) = Im E_0^+(-1/t) / pi`` on the default grid (about half a
minute per CPU), then compares its moments with the perturbation
coefficients and the dispersion integral with the level at ``beta = 1``.
Run with ``python demos/density_and_dispersion.py``.
"""

from cubic_lab.model import CutParameter
from cubic_lab.rs_series import rs_coefficients
from cubic_lab.spectrum import level
from cubic_lab.stieltjes_density import (dispersion_value, moments, sample_density, small_t_slope,
                                         tunneling_fit)


def main():
    table = sample_density(0)
    print(f"{len(table.t)} samples on [{table.t_min:.3g}, {table.t_max:.3g}], "
          f"largest rotation spread {table.plateau.max():.1e}")
    print(f"small-t log slope {small_t_slope(table):.4f}  (expected -1/5)")

    fit = tunneling_fit(table)
    corrected = tunneling_fit(table, corrections=1)
    print(f"tail fit p t^q exp(-A t) on [10, 40]: A = {fit.A:.4f}, q = {fit.q:.3f}")
    print(f"with a c/t correction in the exponent:  A = {corrected.A:.4f}  (8/15 = {8 / 15:.4f})")

    series = rs_coefficients(0, 5)
    print("\nk  moment            |e_{0,k+1}|        budget")
    for k, res in enumerate(moments(table, 3, fit)):
        print(f"{k}  {res.value.real:<16.10g}  {abs(float(series[k + 1])):<16.10g}  {res.error:.1e}")

    beta = CutParameter(1.0)
    E, res = dispersion_value(table, beta, fit)
    direct = level(beta, 0, tol=1e-11).energy.real
    print(f"\ndispersion E_0(1) = {E.real:.12f}, direct {direct:.12f}, budget {res.error:.1e}")


if __name__ == "__main__":
    main()
