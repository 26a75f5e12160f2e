use super::{MeshError, TriangleMesh};

/// Parses ASCII OFF, one vertex or face per line. Accepts the counts on the
/// header line (`OFF12 20 0`, as found in some ModelNet files) and `#`
/// comments. Polygons with more
/// than three vertices are fan-triangulated from their first vertex.
pub fn load_off(bytes: &[u8]) -> Result<TriangleMesh, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|e| MeshError::MalformedHeader(format!("not UTF-8: {e}")))?;
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());

    let head = lines
        .next()
        .ok_or_else(|| MeshError::MalformedHeader("empty input".into()))?;
    let rest = head
        .strip_prefix("OFF")
        .ok_or_else(|| MeshError::MalformedHeader(format!("expected OFF, found {head:?}")))?
        .trim();
    let counts_line = if rest.is_empty() {
        lines
            .next()
            .ok_or_else(|| MeshError::MalformedHeader("missing counts line".into()))?
    } else {
        rest
    };
    let counts: Vec<usize> = counts_line
        .split_whitespace()
        .map(|s| s.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| MeshError::MalformedHeader(format!("bad counts line {counts_line:?}")))?;
    if counts.len() != 3 {
        return Err(MeshError::MalformedHeader(format!("bad counts line {counts_line:?}")));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let body: Vec<&str> = lines.collect();
    if body.len() != nv + nf {
        return Err(MeshError::CountMismatch(format!(
            "header declares {nv} vertices and {nf} faces, body has {} lines",
            body.len()
        )));
    }
    let mut vertices = Vec::with_capacity(nv);
    for (i, line) in body[..nv].iter().enumerate() {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<Result<_, _>>()
            .map_err(|_| MeshError::CountMismatch(format!("vertex {i}: {line:?} is not numeric")))?;
        if vals.len() != 3 {
            return Err(MeshError::CountMismatch(format!("vertex {i} has {} coordinates", vals.len())));
        }
        if vals.iter().any(|c| !c.is_finite()) {
            return Err(MeshError::NonFiniteCoordinate(i));
        }
        vertices.push([vals[0], vals[1], vals[2]]);
    }
    let mut faces = Vec::with_capacity(nf);
    for (fi, line) in body[nv..].iter().enumerate() {
        let bad = |reason: String| MeshError::MalformedFace { index: fi, reason };
        let vals: Vec<usize> = line
            .split_whitespace()
            .map(str::parse::<usize>)
            .collect::<Result<_, _>>()
            .map_err(|_| bad(format!("{line:?} is not a list of indices")))?;
        let k = vals[0];
        if k < 3 || vals.len() < k + 1 {
            return Err(bad(format!("{line:?} does not hold a polygon")));
        }
        let idx = &vals[1..=k];
        if let Some(&i) = idx.iter().find(|&&i| i >= nv) {
            return Err(bad(format!("index {i} >= vertex count {nv}")));
        }
        for j in 1..k - 1 {
            faces.push([idx[0], idx[j], idx[j + 1]]);
        }
    }
    TriangleMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_triangle() {
        let m = load_off(b"OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn short_body_is_count_mismatch() {
        let r = load_off(b"OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
        assert!(matches!(r, Err(MeshError::CountMismatch(_))), "{r:?}");
    }

    #[test]
    fn quad_is_fanned() {
        let m = load_off(b"OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn counts_glued_to_header() {
        let m = load_off(b"OFF3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(m.faces.len(), 1);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(load_off(b"PLY\n"), Err(MeshError::MalformedHeader(_))));
        assert!(matches!(load_off(b"OFF\n3 1\n"), Err(MeshError::MalformedHeader(_))));
        assert!(matches!(load_off(b""), Err(MeshError::MalformedHeader(_))));
    }

    #[test]
    fn non_finite_vertex() {
        let r = load_off(b"OFF\n3 1 0\n0 0 0\ninf 0 0\n0 1 0\n3 0 1 2\n");
        assert_eq!(r, Err(MeshError::NonFiniteCoordinate(1)));
    }
}
