//! Fixtures shared by the kernel benchmarks.

use xsect_core::Matrix;

/// `[[a, b], [0, c]]` assembled from 2×2 blocks.
pub fn upper4(a: &Matrix, b: &Matrix, c: &Matrix) -> Matrix {
    let mut m = Matrix::zeros(4);
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = a[(i, j)];
            m[(i, j + 2)] = b[(i, j)];
            m[(i + 2, j + 2)] = c[(i, j)];
        }
    }
    m
}

pub fn rotation(theta: f64) -> Matrix {
    let (c, s) = (theta.cos(), theta.sin());
    Matrix::new(&[[c, s], [-s, c]])
}

/// One dilation per discrete section construction.
pub fn mixed_dilations() -> Vec<(&'static str, Matrix)> {
    let r = rotation(1.0);
    vec![
        ("diag", Matrix::diag(&[2.0, 0.5])),
        ("spiral", Matrix::new(&[[1.2, 1.6], [-1.6, 1.2]])),
        ("shear", Matrix::new(&[[1.0, 1.0], [0.0, 1.0]])),
        ("rotation_nilpotent_4d", upper4(&r, &Matrix::identity(2), &r)),
    ]
}
