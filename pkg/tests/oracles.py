"""Reference values computed independently with mpmath at 40 digits.

``FROZEN`` holds the values used by the tests; ``compute()`` regenerates
them and ``test_oracles_reproduce`` checks that the frozen copy is current.
Nothing here calls into the package.
"""
import mpmath as mp

FROZEN = {
    "collar_X_2": 2.2149071522967363,
    "collar_X_small_scaled": 0.9999996816901138,
    "catenoid_L_crit": 1.1996786402577337,
    "catenoid_max_ratio": 0.6627434193491816,
    "catenoid_L_half": 0.5893877634693505,
    "catenoid_a_half": 5.330264468161397,
    "catenoid_L_unstable_half": 2.1267998926782568,
    "catenoid_energy_half": 5.9917969758022815,
    "straight_energy_a1_h03": 6.439762071263517,
    "straight_dEda_a1_h03": 0.03310179223594182,
    "straight_hres_a1_h03": 0.046813003518925346,
    "cyl_dtn_top_a07_k3": 33.79429276596198,
    "cyl_dtn_bottom_a07_k3": 11.264764255199301,
    "cyl_dtn_top_a5_k1": -9.700226290333777,
    "cyl_dtn_bottom_a5_k1": 10.482640751519895,
}


def _cyl_dtn(a, k, sigma, delta):
    """Outward normal derivative at s = +L and s = -L of the harmonic mode
    f(s) e^{ik theta}, f = sigma cosh(ks)/cosh(kL) + delta sinh(ks)/sinh(kL),
    divided by the conformal factor sqrt(a) / (2 pi)."""
    a = mp.mpf(a)
    L = mp.pi / a
    lam = mp.sqrt(a) / (2 * mp.pi)
    top = k * (sigma * mp.tanh(k * L) + delta * mp.coth(k * L))
    bottom = k * (sigma * mp.tanh(k * L) - delta * mp.coth(k * L))
    return top / lam, bottom / lam


def _straight(a, h, r=1):
    """Energy of the straight cylinder map (r cos t, r sin t, +-h) and its a-derivative."""
    a, h, r = mp.mpf(a), mp.mpf(h), mp.mpf(r)
    E = lambda L: 2 * mp.pi * (r ** 2 * mp.tanh(L) + h ** 2 / L)  # noqa: E731
    L = mp.pi / a
    dEdL = mp.diff(E, L)
    dEda = -(L / a) * dEdL
    return E(L), dEda, mp.sqrt(2) * a * abs(dEda)


def compute():
    mp.mp.dps = 40
    out = {}
    X = lambda l: (2 * mp.pi / l) * (mp.pi / 2 - mp.atan(mp.sinh(l / 2)))  # noqa: E731
    out["collar_X_2"] = X(mp.mpf(2))
    out["collar_X_small_scaled"] = X(mp.mpf("1e-6")) * mp.mpf("1e-6") / mp.pi ** 2
    f = lambda L: L / mp.cosh(L) - mp.mpf("0.5")  # noqa: E731
    Lc = mp.findroot(lambda L: mp.coth(L) - L, 1.2)
    out["catenoid_L_crit"] = Lc
    out["catenoid_max_ratio"] = Lc / mp.cosh(Lc)
    Ls = mp.findroot(f, 0.6)
    out["catenoid_L_half"] = Ls
    out["catenoid_a_half"] = mp.pi / Ls
    out["catenoid_L_unstable_half"] = mp.findroot(f, 2.1)
    out["catenoid_energy_half"] = 2 * mp.pi * (mp.tanh(Ls) + mp.mpf("0.25") / Ls)
    E, dEda, hres = _straight("1", "0.3")
    out["straight_energy_a1_h03"] = E
    out["straight_dEda_a1_h03"] = dEda
    out["straight_hres_a1_h03"] = hres
    t, b = _cyl_dtn("0.7", 3, mp.mpf(1), mp.mpf("0.5"))
    out["cyl_dtn_top_a07_k3"], out["cyl_dtn_bottom_a07_k3"] = t, b
    t, b = _cyl_dtn("5", 1, mp.mpf("0.25"), mp.mpf(-2))
    out["cyl_dtn_top_a5_k1"], out["cyl_dtn_bottom_a5_k1"] = t, b
    return {k: float(v) for k, v in out.items()}


if __name__ == "__main__":
    for k, v in compute().items():
        print(f'    "{k}": {v!r},')
