"""Score one tiny example with all three coreference metrics, by hand and
by the library, then show what singleton handling changes."""

from fractions import Fraction

from corefmtl import (Document, Mention, evaluate, score_b_cubed,
                      score_ceaf_phi4, score_muc)


def tiny_document(clusters):
    tokens = ["Ana", "met", "the", "mayor", "and", "she", "waved", "."]
    mentions = [Mention(s, e, cluster_id=ci)
                for ci, cluster in enumerate(clusters) for s, e in cluster]
    return Document(doc_key="demo/tiny_0", genre="demo", sentences=[tokens],
                    speakers=[["ana"] * len(tokens)], gold_clusters=clusters,
                    gold_mentions=sorted(mentions, key=lambda m: m.span))


def main():
    # key puts a, b, c in one entity; the response splits off c
    a, b, c = (0, 0), (1, 1), (2, 2)
    key = [[a, b, c]]
    response = [[a, b], [c]]

    muc = score_muc(key, response)
    b3 = score_b_cubed(key, response)
    ceaf = score_ceaf_phi4(key, response)
    print("key {a,b,c} vs response {a,b},{c}")
    print(f"  MUC       P {muc.precision:.4f} R {muc.recall:.4f} F1 {muc.f1:.4f}"
          f"   (F1 = {Fraction(2, 3)})")
    print(f"  B-cubed   P {b3.precision:.4f} R {b3.recall:.4f} F1 {b3.f1:.4f}"
          f"   (F1 = {Fraction(5, 7)})")
    print(f"  CEAF-phi4 P {ceaf.precision:.4f} R {ceaf.recall:.4f} F1 {ceaf.f1:.4f}"
          f"   (F1 = {Fraction(8, 15)})")

    # MUC cannot see singletons at all: a lone mention carries no link
    print("\nMUC against the response without its singleton:",
          f"{score_muc(key, [[a, b]]).f1:.4f} (unchanged)")

    # at the corpus level the same switch is the keep_singletons flag
    gold = tiny_document([[(0, 0), (5, 5)], [(2, 3)]])
    blind_to_singletons = tiny_document([[(0, 0), (5, 5)]])

    dropped = evaluate([gold], [blind_to_singletons])
    kept = evaluate([gold], [blind_to_singletons], keep_singletons=True)
    print("\nmissing the gold singleton costs nothing while singletons are "
          f"dropped: avg F1 {dropped.avg_f1:.4f}")
    print(f"but shows up once they are kept: avg F1 {kept.avg_f1:.4f}")


if __name__ == "__main__":
    main()
