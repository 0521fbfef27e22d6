"""Text and gene-expression preprocessing on small hand-made matrices.

Run with ``python demos/preprocessing.py``.
"""

import numpy as np

from rmc.core import RelationalData
from rmc.ingest import LEUKEMIA2, Dataset, gene_preprocess, select_words_by_mi, unit_normalize, word_mi_scores


def main():
    # rows are words, columns are documents
    counts = np.array([[2, 2, 2, 2], [4, 4, 0, 0], [1, 1, 5, 5], [0, 1, 0, 7]], dtype=float)
    print("word MI scores (nats):", np.round(word_mi_scores(counts), 4))
    docs = select_words_by_mi(Dataset(RelationalData(counts)), 3)
    docs = unit_normalize(docs, "samples")
    print("kept words, unit-length documents:")
    print(np.round(docs.r12, 3))

    # rows are genes, columns are tissue samples
    genes = np.array([
        [50.0, 16000.0, 3000.0, 800.0],
        [700.0, 700.0, 700.0, 700.0],
        [100.0, 2000.0, 20000.0, 400.0],
        [1000.0, 1200.0, 1100.0, 1050.0],
    ])
    kept = gene_preprocess(Dataset(RelationalData(genes)), LEUKEMIA2)
    print("genes after clamping and variation filtering:")
    print(kept.r12)


if __name__ == "__main__":
    main()
