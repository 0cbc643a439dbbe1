"""Generator, discriminators, losses and the resynthesis trainer."""
