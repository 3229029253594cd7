use std::ops::{Deref, DerefMut};

use crate::linalg;

macro_rules! flat_vector {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn zeros(len: usize) -> Self {
                Self(vec![0.0; len])
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn norm(&self) -> f64 {
                linalg::norm(&self.0)
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }

            /// Entries of vertex `i` in column-stacking order.
            pub fn vertex(&self, i: usize) -> [f64; 2] {
                [self.0[2 * i], self.0[2 * i + 1]]
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

flat_vector!(
    /// Derivative of a function of the vertex coordinates, indexed by the
    /// column-stacking order of the coordinate matrix.
    Covector
);

flat_vector!(
    /// Displacement field of the vertices, same indexing as [`Covector`].
    TangentVector
);

impl Covector {
    /// The pairing `d[V]`.
    pub fn apply(&self, v: &TangentVector) -> f64 {
        linalg::dot(&self.0, &v.0)
    }
}
