"""Score the simulator the way a rater study does.

Three raters (one expert surgeon, two residents) fill 1-10 score sheets
per validity metric; aggregation gives the headline numbers. The two
reliability statistics quantify rater agreement and repeat stability.
"""

from palpsim.validity import (
    RaterRole,
    ValidityScoreSheet,
    aggregate_validity,
    inter_rater,
    test_retest,
)

sheets = [
    ValidityScoreSheet("expert-1", RaterRole.EXPERT,
                       {"face": 8, "content": 9, "construct": 7}),
    ValidityScoreSheet("resident-1", RaterRole.RESIDENT,
                       {"face": 8, "content": 9, "construct": 6}),
    ValidityScoreSheet("resident-2", RaterRole.RESIDENT,
                       {"face": 8, "content": 9, "construct": 7}),
]
result = aggregate_validity(sheets)
print("validity score means (1-10):")
for metric, mean in result["means"].items():
    print(f"  {metric:>10}: {mean}")
print(f"by role: {result['by_role']}")

matrix = [[s.scores[m] for m in ("face", "content", "construct")] for s in sheets]
agreement = inter_rater(matrix)
print(f"\ninter-rater: mean pairwise |diff| = "
      f"{agreement['mean_pairwise_abs_diff']:.2f}, "
      f"exact agreement on {agreement['exact_agreement_fraction']:.0%} of items")

pairs = [(8, 8), (9, 9), (7, 8), (6, 6), (9, 8)]
stability = test_retest(pairs)
print(f"test-retest over {len(pairs)} repeat administrations: "
      f"mean |diff| = {stability['mean_abs_diff']:.2f}, "
      f"Pearson r = {stability['pearson_r']:.3f}")
