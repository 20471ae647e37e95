"""
Conversion between 4-axis convolution filters and 2-D weight matrices.

A filter of shape (C_out, C_in, H, S) becomes an (S*H*C_in) x C_out matrix.
Row index enumerates (c_in, h, s) with c_in slowest and s fastest:
row = c_in * (H * S) + h * S + s. Column index is c_out.
"""

from typing import Sequence, Tuple

import numpy as np
import numpy.typing as npt

from .errors import DimensionError
from .linalg import Matrix


def _check_filter_shape(shape: Sequence[int]) -> Tuple[int, int, int, int]:
    if len(shape) != 4:
        raise DimensionError(f"conv filter must have 4 axes (C_out, C_in, H, S), got {tuple(shape)}")
    if any(int(size) < 1 for size in shape):
        raise DimensionError(f"conv filter axes must all be >= 1, got {tuple(shape)}")
    return tuple(int(size) for size in shape)  # type: ignore[return-value]


def conv_reshape(filt: npt.ArrayLike) -> Matrix:
    """Reshape a (C_out, C_in, H, S) filter into an (S*H*C_in) x C_out matrix."""
    tensor = np.asarray(filt, dtype=np.float64)
    c_out, c_in, h, s = _check_filter_shape(tensor.shape)
    return np.ascontiguousarray(tensor.reshape(c_out, c_in * h * s).T)


def conv_unreshape(matrix: Matrix, raw_shape: Sequence[int]) -> npt.NDArray[np.float64]:
    """Inverse of ``conv_reshape``."""
    c_out, c_in, h, s = _check_filter_shape(raw_shape)
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape != (c_in * h * s, c_out):
        raise DimensionError(f"matrix of shape {matrix.shape} does not match filter shape {tuple(raw_shape)}")
    return np.ascontiguousarray(matrix.T.reshape(c_out, c_in, h, s))


def im2col(images: npt.NDArray[np.float64], kernel: Tuple[int, int]) -> npt.NDArray[np.float64]:
    """
    Extract valid, stride-1 patches in ``conv_reshape`` row order.

    Args:
        images: Batch of shape (N, C_in, H_img, W_img)
        kernel: (H, S) filter height and width

    Returns:
        Matrix of shape (N * H_out * W_out, C_in * H * S)
    """
    h, s = kernel
    n, c_in, h_img, w_img = images.shape
    if h > h_img or s > w_img:
        raise DimensionError(f"kernel {kernel} larger than image {(h_img, w_img)}")
    windows = np.lib.stride_tricks.sliding_window_view(images, (h, s), axis=(2, 3))
    # (N, C_in, H_out, W_out, H, S) -> (N, H_out, W_out, C_in, H, S)
    windows = windows.transpose(0, 2, 3, 1, 4, 5)
    h_out, w_out = windows.shape[1], windows.shape[2]
    return np.ascontiguousarray(windows.reshape(n * h_out * w_out, c_in * h * s))
