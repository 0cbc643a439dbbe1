"""Resolution ladders and the multi-resolution resampling module."""
