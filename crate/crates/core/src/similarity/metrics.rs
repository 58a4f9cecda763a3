use crate::error::{Error, Result};

fn same_dim(x: &[f64], y: &[f64], what: &str) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{what}: vectors have dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn euclidean(x: &[f64], y: &[f64]) -> Result<f64> {
    same_dim(x, y, "euclidean")?;
    Ok(x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

pub fn manhattan(x: &[f64], y: &[f64]) -> Result<f64> {
    same_dim(x, y, "manhattan")?;
    Ok(x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum())
}

/// `x·y / (‖x‖ ‖y‖)` before clamping.
pub fn cosine_unclamped(x: &[f64], y: &[f64]) -> Result<f64> {
    same_dim(x, y, "cosine")?;
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::UndefinedSimilarity(format!(
            "cosine of a zero vector (norms {nx} and {ny})"
        )));
    }
    if x == y {
        return Ok(1.0);
    }
    Ok(dot(x, y) / (nx * ny))
}

/// Cosine similarity clamped to `[-1, 1]`. Exactly 1 for identical inputs.
pub fn cosine(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(cosine_unclamped(x, y)?.clamp(-1.0, 1.0))
}

pub fn l2_normalize(x: &[f64]) -> Result<Vec<f64>> {
    let n = norm(x);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::UndefinedSimilarity(format!(
            "cannot L2-normalize a vector with norm {n}"
        )));
    }
    Ok(x.iter().map(|v| v / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_have_cosine_exactly_one() {
        let x = [0.1, 0.7, -0.3, 1e-3];
        assert_eq!(cosine(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn zero_vector_and_dimension_errors() {
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::UndefinedSimilarity(_))
        ));
        assert!(matches!(
            euclidean(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            l2_normalize(&[0.0]),
            Err(Error::UndefinedSimilarity(_))
        ));
    }

    #[test]
    fn normalize_gives_unit_norm() {
        let v = l2_normalize(&[3.0, 4.0]).unwrap();
        assert_eq!(v, vec![0.6, 0.8]);
    }
}
