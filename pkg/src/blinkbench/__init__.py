"""blinkbench: train small eye-closedness CNNs, attack them with
FGSM / PGD / DeepFool, adversarially retrain, and report robustness metrics."""

__version__ = "0.1.0"
