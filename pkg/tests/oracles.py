"""Independent high-precision references built on mpmath.quad.

Nothing here imports locdens; frozen constants in the tests were produced by
running this module (``python tests/oracles.py``).
"""
import mpmath as mp

mp.mp.dps = 30


def _gauss(p, p0, sigma):
    return mp.e ** (-((p - p0) ** 2) / (4 * sigma**2))


def _energy(p, m):
    return mp.sqrt(m**2 + p**2)


def _split(p0, sigma, lo=-mp.inf, hi=mp.inf):
    pts = [lo] + [p0 + k * sigma for k in (-8, -4, -1, 0, 1, 4, 8) if lo < p0 + k * sigma < hi] + [hi]
    return pts


def gaussian_norm(m, p0, sigma, lo=-mp.inf):
    """Constant N with integral dp/(4 pi E) N^2 |g|^2 = 1 (d=1)."""
    pts = _split(p0, sigma, lo=lo)
    i = mp.quad(lambda p: _gauss(p, p0, sigma) ** 2 / (4 * mp.pi * _energy(p, m)), pts)
    return 1 / mp.sqrt(i)


def gaussian_overlap(m, a, b, sigma):
    na, nb = gaussian_norm(m, a, sigma), gaussian_norm(m, b, sigma)
    pts = sorted(set(_split(a, sigma) + _split(b, sigma)))
    return na * nb * mp.quad(
        lambda p: _gauss(p, a, sigma) * _gauss(p, b, sigma) / (4 * mp.pi * _energy(p, m)), pts
    )


def mean_energy(m, p0, sigma):
    n = gaussian_norm(m, p0, sigma)
    return n**2 * mp.quad(lambda p: _gauss(p, p0, sigma) ** 2 / (4 * mp.pi), _split(p0, sigma))


def plain_field_origin(m, p0, sigma):
    """psi(x=0, t=0) for the normalized Gaussian, d=1."""
    n = gaussian_norm(m, p0, sigma)
    return n * mp.quad(lambda p: _gauss(p, p0, sigma) / (4 * mp.pi * _energy(p, m)), _split(p0, sigma))


if __name__ == "__main__":
    print("N(m=1,p0=0,s=.25)  ", gaussian_norm(1, 0, 0.25))
    print("N(m=1,p0=1,s=.25)  ", gaussian_norm(1, 1, 0.25))
    print("N(m=0,p0=2,s=.25)  ", gaussian_norm(0, 2, 0.25, lo=0))
    print("<0|0.5> m=1 s=.25  ", gaussian_overlap(1, 0, 0.5, 0.25))
    print("<H> m=1 p0=0 s=.25 ", mean_energy(1, 0, 0.25))
    print("<H> m=1 p0=2 s=.25 ", mean_energy(1, 2, 0.25))
    print("psi(0,0) m=1 p0=0  ", plain_field_origin(1, 0, 0.25))
