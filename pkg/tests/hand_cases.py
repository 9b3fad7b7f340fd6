"""Hand-worked single-deposit cases: (name, d, N, heights, site, expected new height).

Heights are given on the whole box in canonical order; sites outside the
box read as 0 (pinned-zero).
"""

# the three reference examples
REFERENCE = [
    ("flat", 1, 1, [0, 0, 0], (0,), 1),
    ("side-attach", 1, 1, [5, 0, 2], (0,), 5),
    ("d2-own-column", 2, 1, [[9, 1, 9], [2, 3, 0], [9, 3, 9]], (0, 0), 4),
]

HAND = [
    # d = 1
    ("right-taller", 1, 1, [0, 0, 7], (0,), 7),
    ("equal-neighbours", 1, 1, [4, 4, 4], (0,), 5),
    ("neighbour-one-above", 1, 1, [0, 3, 4], (0,), 4),
    ("neighbour-two-above", 1, 1, [5, 3, 0], (0,), 5),
    ("own-column-wins", 1, 1, [1, 6, 2], (0,), 7),
    ("left-edge-pinned", 1, 1, [0, 0, 0], (-1,), 1),
    ("left-edge-right-taller", 1, 1, [2, 8, 0], (-1,), 8),
    ("right-edge", 1, 2, [0, 0, 0, 3, 1], (2,), 3),
    ("single-site", 1, 0, [6], (0,), 7),
    ("negative-field", 1, 1, [-3, -5, -4], (0,), -3),
    ("far-site-irrelevant", 1, 2, [9, 0, 0, 0, 0], (1,), 1),
    ("tie-with-own+1", 1, 1, [3, 2, 0], (0,), 3),
    # d = 2, layout heights[x1 + N][x2 + N]
    ("d2-flat", 2, 1, [[0] * 3] * 3, (0, 0), 1),
    ("d2-up-neighbour", 2, 1, [[0, 0, 0], [0, 0, 6], [0, 0, 0]], (0, 0), 6),
    ("d2-left-neighbour", 2, 1, [[0, 5, 0], [0, 1, 0], [0, 0, 0]], (0, 0), 5),
    ("d2-diagonal-ignored", 2, 1, [[9, 0, 9], [0, 0, 0], [9, 0, 9]], (0, 0), 1),
    ("d2-corner-pinned", 2, 1, [[0, 0, 0], [0, 0, 0], [0, 0, 0]], (1, 1), 1),
    ("d2-corner-inner-neighbour", 2, 1, [[0, 0, 0], [0, 0, 4], [0, 4, 2]], (1, 1), 4),
    ("d2-own-tallest", 2, 1, [[0, 1, 0], [2, 5, 3], [0, 4, 0]], (0, 0), 6),
    ("d2-edge-site", 2, 2, [[0] * 5, [0] * 5, [0, 0, 0, 0, 0], [0] * 5,
                            [0, 0, 7, 0, 0]], (1, 0), 7),
]

ALL = REFERENCE + HAND
