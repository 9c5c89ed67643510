"""Spotting folds with the approximation error.

A drawing is compared edge by edge with the lengths implied by signal
strength. Edges that come out much shorter than they should (after
normalising both sides by their mean) get a large z-score ``r``; connected
groups of such edges are the folded regions W-KK-MS lays out again.

Here the fold is made by hand: the true drawing of a donut network is taken
and the strip right of ``x = cut`` is mirrored back over the cut and
squashed, which is what a crumpled corner of a spring layout looks like.

    python3 demos/folded_regions.py
"""
import numpy as np

from cncah.graph import edge_lengths
from cncah.topogen import generate_instance
from cncah.wkkms import est_region, expected_lengths

topo, truth, _, _ = generate_instance("donut", 300, 8, 2)
expected = expected_lengths(topo, truth.positions)  # metres from signal strength
print(f"signal-strength lengths: mean {expected.mean():.2f} m over {topo.m} edges")

# the true drawing has no fold, so nothing stands out
rep = est_region(expected, edge_lengths(truth.positions, topo.edge_array), topo.edge_array,
                 theta=2.5)
print(f"true drawing: max r {rep.r.max():.2f}, {len(rep.regions)} regions")

cut = 0.8
pos = truth.copy_positions()
side = pos[:, 0] > cut
pos[side, 0] = cut - 0.25 * (pos[side, 0] - cut)
drawn = edge_lengths(pos, topo.edge_array)
print(f"folded {int(side.sum())} nodes right of x={cut}")

for theta in (4.0, 2.5):
    rep = est_region(expected, drawn, topo.edge_array, theta=theta, min_region_edges=10)
    print(f"theta {theta}: max r {rep.r.max():.2f}, {int(np.sum(rep.r >= theta))} edges above, "
          f"{len(rep.regions)} regions")
    for reg in rep.regions:
        inside = np.isin(reg.nodes, np.flatnonzero(side)).mean()
        print(f"  region of {len(reg.edges)} edges over {len(reg.nodes)} nodes, "
              f"{inside:.0%} of them in the folded strip")
