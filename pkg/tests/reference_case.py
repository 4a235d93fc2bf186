"""Reference values of the small Henon-Heiles example (omega = (1, -sqrt(2)/2), R_I = 2, R_II = 5).

Coefficient rows are ``(l, lt, unit, central value, half-width in units of the
last printed digit)``; ``unit`` says whether the value sits on the real or
imaginary part and with which sign.
"""

from fractions import Fraction

F1 = [
    ((2, 1), (0, 0), "-i", "0.353553390593273731", 3026),
    ((0, 0), (0, 3), "-1", "0.117851130197757920", 951),
    ((2, 0), (0, 1), "-1", "0.353553390593273731", 2859),
    ((1, 1), (1, 0), "-1", "0.707106781186547462", 6051),
    ((1, 0), (1, 1), "i", "0.707106781186547462", 5718),
    ((0, 3), (0, 0), "i", "0.117851130197757920", 1034),
    ((0, 2), (0, 1), "1", "0.353553390593273731", 3109),
    ((0, 1), (2, 0), "i", "0.353553390593273731", 2859),
    ((0, 1), (0, 2), "-i", "0.353553390593273731", 3054),
    ((0, 0), (2, 1), "1", "0.353553390593273731", 2693),
]

CHI1 = [
    ((2, 1), (0, 0), "1", "0.273459080339013560", 20345),
    ((2, 0), (0, 1), "-i", "0.130601937481870711", 5246),
    ((1, 1), (1, 0), "i", "0.999999999999999889", 40524),
    ((0, 0), (0, 3), "-i", "0.0555555555555555525", 22552),
    ((1, 0), (1, 1), "-1", "0.999999999999999889", 40080),
    ((0, 3), (0, 0), "1", "0.0555555555555555525", 22934),
    ((0, 2), (0, 1), "-i", "0.499999999999999889", 20401),
    ((0, 1), (2, 0), "1", "0.130601937481870711", 5246),
    ((0, 1), (0, 2), "1", "0.499999999999999889", 20318),
    ((0, 0), (2, 1), "-i", "0.273459080339013560", 20096),
]

Z2 = [
    ((2, 0), (2, 0), "-1", "0.656599153958936865", 325684),
    ((0, 2), (0, 2), "-1", "0.589255650988789514", 313083),
    ((1, 1), (1, 1), "1", "1.98564213380166632", 125900),
]

LOG_A = (0.4424676, 2.599403, 2.664144, 3.937671, 4.002009)
TRACE = (-34.71383, -39.36487, -42.15919, -41.66110)
LOG_F1 = {3: 6.685803, 4: 8.979949, 5: 11.16873}
LOG_F2 = {4: 9.014286, 5: 11.55494}
LOG_F3 = {5: 13.18247}
LOG_NORM_F2 = 2.446291
RHO = 1e-4
RHO0 = 0.00008165
LOG_T = 24.92920


def parse(row):
    """Return ``(l, lt, on_imag, exact_value, half_width)`` with exact fractions."""
    l, lt, unit, text, hw = row
    digits = len(text.split(".")[1])
    sign = -1 if unit.startswith("-") else 1
    return l, lt, unit.endswith("i"), sign * Fraction(text), Fraction(hw, 10**digits)


def check_listing(poly, table):
    """Yield ``(key, contained, other_part_has_zero, width, half_width)`` per row."""
    for row in table:
        l, lt, imag, value, hw = parse(row)
        c = poly.coeff(l, lt)
        part, other = (c.im, c.re) if imag else (c.re, c.im)
        width = Fraction(part.hi) - Fraction(part.lo)
        yield (l, lt), part.contains(value), other.contains(0), width, hw


def sig(x, digits):
    return f"{x:.{digits - 1}e}"
