"""Shared fixture builders for the test suite."""

from corefmtl.corpus import Document, Mention


def make_document(sentences, clusters=(), mentions=None, doc_key="test/doc_0",
                  genre="test", speakers=None):
    """Document from token lists; mentions default to the clustered spans."""
    sentences = [list(s) for s in sentences]
    if speakers is None:
        speakers = [["spk"] * len(s) for s in sentences]
    clusters = [sorted(map(tuple, c)) for c in clusters]
    clusters.sort(key=lambda c: c[0])
    if mentions is None:
        mentions = []
        for ci, cluster in enumerate(clusters):
            for s, e in cluster:
                mentions.append(Mention(s, e, cluster_id=ci))
        mentions.sort(key=lambda m: m.span)
    return Document(doc_key=doc_key, genre=genre, sentences=sentences,
                    speakers=speakers, gold_clusters=clusters,
                    gold_mentions=mentions)


def spans_to_clusters(*clusters):
    return [[tuple(span) for span in c] for c in clusters]
