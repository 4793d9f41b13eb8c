"""Which gate algebras do different symmetry groups and character sets reach?"""

from sptmbqc import cohomology as coh
from sptmbqc import lie


def main():
    for orders in [(2, 2), (3, 3), (4, 4), (6, 6), (8, 8)]:
        g = coh.FiniteAbelianGroup(orders)
        text = lie.reachability_report(g, coh.standard_cocycle(g)).text()
        # grid art lines are indented by four spaces
        print("\n".join(ln for ln in text.splitlines() if not ln.startswith("    ")))
        print()

    g, w, _ = coh.weyl_setup(3)
    present = [coh.Character(g, (1, 0)), coh.Character(g, (0, 1))]
    print("Z3 x Z3 with two characters:", lie.reachability_report(g, w, present=present).verdict)

    _, grid = lie.fill_grid(lie.grid_init(lie.canonical_triple(8, 1), 1), strategy="rowcol")
    print("\nrow/column schedule for D = 8, r = 1:")
    for name, pts in grid.milestones:
        print(f"  {name:10s} {len(pts):2d} points")
    print(grid.render())


if __name__ == "__main__":
    main()
