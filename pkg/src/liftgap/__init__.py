"""liftgap: exact certification of lifted-moment integrality-gap instances
for spanner and Steiner network problems.

Modules:
    algebra          exact rational/field primitives, PSD check, LP solver
    lasserre_core    moment vectors, moment/slack matrices, union lemmas
    projection_games bipartite projection games, generators, pruning
    projection_sdp   lifted solutions for games and their verification
    reductions       graph constructions from games, path structure checks
    relaxations      LP/SDP feasibility certification for spanner instances
    gap_pipeline     fractional solutions, exact integral optima, reports
    cli              command-line entry points
"""

__version__ = "0.1.0"
