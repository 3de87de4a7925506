//! Small fixed-size helpers over algebra elements.

use crate::polyalg::Algebra;

pub fn dot<A: Algebra>(a: &[A], b: &[A]) -> A {
    let mut acc = a[0].mul_ref(&b[0]);
    for (x, y) in a.iter().zip(b).skip(1) {
        acc = acc.add_ref(&x.mul_ref(y));
    }
    acc
}

/// `M v` for a row-major 3×3 matrix.
pub fn mat_vec<A: Algebra>(m: &[[A; 3]; 3], v: &[A]) -> [A; 3] {
    std::array::from_fn(|i| dot(&m[i], v))
}

/// `Mᵀ v` for a row-major 3×3 matrix.
pub fn mat_t_vec<A: Algebra>(m: &[[A; 3]; 3], v: &[A]) -> [A; 3] {
    std::array::from_fn(|j| {
        let col = [m[0][j].clone(), m[1][j].clone(), m[2][j].clone()];
        dot(&col, v)
    })
}
