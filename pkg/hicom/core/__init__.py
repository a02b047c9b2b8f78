"""Core metrics, fusion, crops, manifests and checkpoints."""
