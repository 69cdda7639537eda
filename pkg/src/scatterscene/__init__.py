"""scatterscene: 3-D reconstruction toolkit for footage shot in scattering media.

Frame enhancement (statistical colour correction, CLAHE, Bayesian-Retinex
decomposition), pose/sharpness keyframe filtering, a hash-encoded radiance
field trained by volume rendering, and the image quality metrics used to
evaluate both stages.
"""

__version__ = "0.1.0"
