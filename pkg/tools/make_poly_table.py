"""Regenerate src/creditqmc/data/irreducible_gf2.txt.

Enumerates irreducible polynomials over GF(2) by trial division, ordered by
degree and then by the integer value of the coefficient bits.
"""
import sys
from pathlib import Path

MAX_DEGREE = 13
OUT = Path(__file__).resolve().parents[1] / "src" / "creditqmc" / "data" / "irreducible_gf2.txt"


def gf2_mod(a: int, b: int) -> int:
    db = b.bit_length()
    while a.bit_length() >= db:
        a ^= b << (a.bit_length() - db)
    return a


def irreducibles(max_degree: int) -> list[int]:
    found: list[int] = []
    for deg in range(1, max_degree + 1):
        for p in range(1 << deg, 1 << (deg + 1)):
            if all(gf2_mod(p, q) for q in found if 2 * (q.bit_length() - 1) <= deg):
                found.append(p)
    return found


def main() -> int:
    polys = irreducibles(MAX_DEGREE)
    lines = [
        "# Irreducible polynomials over GF(2), ordered by degree then coefficient value.",
        "# Format: <degree> <coefficient bits, highest power first>",
        "# Example: '3 1011' is x^3 + x + 1.",
    ]
    lines += [f"{p.bit_length() - 1} {p:b}" for p in polys]
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(polys)} polynomials to {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
