"""K-means codebooks and multi-stream token sequences."""
