"""Independent straight-line reference implementations.

These deliberately avoid the package's abstractions: plain Python
floats, explicit four-line recursions, no shared helpers. They are the
oracles the tests compare the library against, so they must stay
decoupled from the code they check.
"""


def saturating(x):
    return x / (1.0 + abs(x))


def linear(q):
    return lambda x: q * x


def multi_inertial_scalar(T, lam, alpha, beta, gamma, x0, x1, n_steps):
    """Iterates [x0, x1, x2, ...] of the three-extrapolation scheme."""
    xs = [x0, x1]
    for _ in range(n_steps):
        xn, xm = xs[-1], xs[-2]
        y = xn + alpha * (xn - xm)
        z = xn + beta * (xn - xm)
        u = xn + gamma * (xn - xm)
        xs.append((1.0 - lam) * y + (lam / 2.0) * z + (lam / 2.0) * T(u))
    return xs


def km_scalar(T, lam, x0, n_steps):
    xs = [x0]
    for _ in range(n_steps):
        xs.append((1.0 - lam) * xs[-1] + lam * T(xs[-1]))
    return xs


def inertial_km_scalar(T, lam, alpha, x0, x1, n_steps):
    xs = [x0, x1]
    for _ in range(n_steps):
        w = xs[-1] + alpha * (xs[-1] - xs[-2])
        xs.append((1.0 - lam) * w + lam * T(w))
    return xs


# Published reference sequences (4 d.p.), copied verbatim from the
# source tables and figure coordinates.
PUBLISHED_EX1 = [1.0000, 0.5000, 0.3657, 0.3131, 0.2815, 0.2574, 0.2373,
                 0.2202, 0.2053, 0.1920, 0.1800]
PUBLISHED_EX2 = [1.0000, 0.5000, 0.4000, 0.3200, 0.2560, 0.2048, 0.1638,
                 0.1311, 0.1049, 0.0839, 0.0671]
PUBLISHED_EX4_KM = [1.0000, 0.7500, 0.5893, 0.4800, 0.4022, 0.3445, 0.3004]
PUBLISHED_EX4_TWO_STEP = [1.0000, 0.5000, 0.3314, 0.2567, 0.2135, 0.1840, 0.1619]
PUBLISHED_EX4_MULTI = [1.0000, 0.5000, 0.3657, 0.3131, 0.2815, 0.2574, 0.2373]
