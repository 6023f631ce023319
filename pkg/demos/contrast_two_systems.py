"""Compare the mistakes of two predictions on the same gold annotation.

Errors are keyed by anaphor span and kind, so errors both systems share
cancel out and the table shows only where the systems differ, broken
down by the anaphor's surface shape.
"""

from corefmtl import (Document, Mention, PredictionResult, classify_anaphor,
                      contrast, extract_errors, format_contrast)

TOKENS = ["Mrs.", "Park", "opened", "the", "bakery", "before", "dawn",
          "and", "she", "greeted", "a", "customer", "as", "he",
          "admired", "the", "bakery", "."]

GOLD = Document(
    doc_key="demo/bakery_0",
    genre="demo",
    sentences=[TOKENS],
    speakers=[["narrator"] * len(TOKENS)],
    gold_clusters=[[(0, 1), (8, 8)], [(3, 4), (15, 16)], [(10, 11), (13, 13)]],
    gold_mentions=[Mention(0, 1, cluster_id=0), Mention(3, 4, cluster_id=1),
                   Mention(8, 8, cluster_id=0), Mention(10, 11, cluster_id=2),
                   Mention(13, 13, cluster_id=2), Mention(15, 16, cluster_id=1)],
)


def main():
    # system A resolves the pronouns but misses the bakery chain;
    # system B links "he" to the baker and invents a mention at "dawn"
    system_a = PredictionResult("demo/bakery_0", clusters=[
        [(0, 1), (8, 8)], [(10, 11), (13, 13)]])
    system_b = PredictionResult("demo/bakery_0", clusters=[
        [(0, 1), (8, 8), (13, 13)], [(3, 4), (15, 16)], [(6, 6), (10, 11)]])

    for label, system in (("A", system_a), ("B", system_b)):
        print(f"errors of system {label}:")
        for record in extract_errors(GOLD, system):
            phrase = " ".join(TOKENS[record.span[0]:record.span[1] + 1])
            print(f"  {record.kind:<13} at {record.span} {phrase!r} "
                  f"[{record.error_class}]")

    result = contrast([GOLD], [system_a], [system_b])
    print()
    print(format_contrast(result, label_a="A", label_b="B"))

    print("\nsurface-shape classes used above:")
    for span in ((3, 4), (0, 1), (8, 8), (10, 11)):
        phrase = " ".join(TOKENS[span[0]:span[1] + 1])
        print(f"  {phrase!r}: {classify_anaphor(GOLD, span)}")


if __name__ == "__main__":
    main()
