//! Parsing of vectors and point lists given on the command line.
//!
//! A vector is a comma list (`1,2.5,-3`); a single value is broadcast to the
//! model dimension. Point lists separate points with `;`. For one-dimensional
//! models a plain comma list is read as one point per value.

pub fn parse_vector(text: &str, dim: usize, what: &str) -> Result<Vec<f64>, String> {
    let values = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{what}: `{t}` is not a number ({e})")))
        .collect::<Result<Vec<f64>, String>>()?;
    match values.len() {
        n if n == dim => Ok(values),
        1 => Ok(vec![values[0]; dim]),
        n => Err(format!("{what}: expected {dim} coordinates, got {n}")),
    }
}

pub fn parse_points(text: &str, dim: usize, what: &str) -> Result<Vec<Vec<f64>>, String> {
    if text.contains(';') {
        return text.split(';').filter(|p| !p.trim().is_empty()).map(|p| parse_vector(p, dim, what)).collect();
    }
    if dim == 1 {
        return text.split(',').map(|p| parse_vector(p, 1, what)).collect();
    }
    Ok(vec![parse_vector(text, dim, what)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_and_broadcast() {
        assert_eq!(parse_vector("1,-2", 2, "x").unwrap(), vec![1.0, -2.0]);
        assert_eq!(parse_vector("0.5", 3, "x").unwrap(), vec![0.5; 3]);
        assert!(parse_vector("1,2", 3, "x").is_err());
        assert!(parse_vector("a", 1, "x").is_err());
    }

    #[test]
    fn point_lists() {
        assert_eq!(parse_points("-10,0,10", 1, "s").unwrap(), vec![vec![-10.0], vec![0.0], vec![10.0]]);
        assert_eq!(parse_points("0,1;2,3", 2, "s").unwrap(), vec![vec![0.0, 1.0], vec![2.0, 3.0]]);
        assert_eq!(parse_points("1,2", 2, "s").unwrap(), vec![vec![1.0, 2.0]]);
    }
}
