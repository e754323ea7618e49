"""signforge: a multilingual sign-language-production toolkit at desk scale.

Pipeline: per-frame keypoint JSON -> cleaned 2D clips -> 3D skeleton poses ->
the skels storage format; two toy seq2seq production modes (per-language
encoder-decoder switching, and shared-parameter prompt-to-LangGloss); a
reward-driven prioritized training loop; BLEU/ROUGE/DTW evaluation with a
back-translation harness.
"""

__version__ = "0.1.0"
