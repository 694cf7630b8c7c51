//! Text formats: topology edge lists, instance dumps and trace CSVs.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use maxcons_core::engine::Trace;
use maxcons_core::graph::{augment, Graph};
use maxcons_core::problem::{assemble, ProblemInstance, DUMMY_COEFFICIENT, DUMMY_SIDE_COEFFICIENT};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] maxcons_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

/// Non-empty lines with comments (`#`) stripped, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((k + 1, line))
    })
}

fn parse_num<T: std::str::FromStr>(line: usize, token: &str, what: &str) -> Result<T, FormatError> {
    token
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{token}`")))
}

fn parse_node(line: usize, token: &str, n: usize) -> Result<usize, FormatError> {
    let v: usize = parse_num(line, token, "node index")?;
    if v == 0 || v > n {
        return Err(parse_err(line, format!("node {v} outside 1..={n}")));
    }
    Ok(v - 1)
}

fn header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
) -> Result<(usize, &'a str), FormatError> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| FormatError::Invalid(format!("missing `{key}=` line")))?;
    let value = line
        .strip_prefix(key)
        .and_then(|rest| rest.trim_start().strip_prefix('='))
        .ok_or_else(|| parse_err(no, format!("expected `{key}=`")))?;
    Ok((no, value.trim()))
}

/// `n=<count>` followed by one `i j` line per edge.
pub fn format_topology(g: &Graph) -> String {
    let mut out = format!("n={}\n", g.node_count());
    for &(a, b) in g.edges() {
        let _ = writeln!(out, "{} {}", a + 1, b + 1);
    }
    out
}

pub fn parse_topology(text: &str) -> Result<Graph, FormatError> {
    let mut lines = content_lines(text);
    let (no, value) = header(&mut lines, "n")?;
    let n: usize = parse_num(no, value, "node count")?;
    let mut edges = Vec::new();
    for (no, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(parse_err(no, "expected `i j`"));
        }
        edges.push((parse_node(no, tokens[0], n)?, parse_node(no, tokens[1], n)?));
    }
    Ok(Graph::new(n, edges)?)
}

pub fn read_topology(path: &Path) -> Result<Graph, FormatError> {
    parse_topology(&fs::read_to_string(path)?)
}

/// Header lines `n`, `c`, `theta` and `s`, then one row per constraint:
///
/// ```text
/// edge 1 2 1 -1 0        # i j A_ij A_ji b_ij
/// edge 1 1' -1 0 -0.3    # dummy edge of node 1
/// ```
///
/// Values are written in shortest round-trip form, so a dump replays
/// bit-identically.
pub fn format_instance(p: &ProblemInstance) -> String {
    let n = p.node_count();
    let mut out = format!("n={n}\nc={}\ntheta={}\ns=", p.c(), p.theta());
    let s: Vec<String> = p.s().iter().map(|v| v.to_string()).collect();
    out.push_str(&s.join(" "));
    out.push('\n');
    let public = p.public();
    for &(a, b) in p.graph().base().edges() {
        let _ = writeln!(
            out,
            "edge {} {} {} {} {}",
            a + 1,
            b + 1,
            public.coefficient(a, b).unwrap_or_default(),
            public.coefficient(b, a).unwrap_or_default(),
            p.regular_offset()
        );
    }
    for i in 0..n {
        let _ = writeln!(
            out,
            "edge {} {}' {} {} {}",
            i + 1,
            i + 1,
            DUMMY_COEFFICIENT,
            DUMMY_SIDE_COEFFICIENT,
            p.dummy_offset(i)
        );
    }
    out
}

/// Parses an instance dump and checks every coefficient row against the
/// rows [`assemble`] produces.
pub fn parse_instance(text: &str) -> Result<ProblemInstance, FormatError> {
    let mut lines = content_lines(text);
    let (no, v) = header(&mut lines, "n")?;
    let n: usize = parse_num(no, v, "node count")?;
    let (no, v) = header(&mut lines, "c")?;
    let c: f64 = parse_num(no, v, "c")?;
    let (no, v) = header(&mut lines, "theta")?;
    let theta: f64 = parse_num(no, v, "theta")?;
    let (no, v) = header(&mut lines, "s")?;
    let s = v
        .split_whitespace()
        .map(|t| parse_num::<f64>(no, t, "private value"))
        .collect::<Result<Vec<_>, _>>()?;
    if s.len() != n {
        return Err(parse_err(
            no,
            format!("expected {n} private values, found {}", s.len()),
        ));
    }

    let mut regular = Vec::new();
    let mut rows = Vec::new();
    let mut dummies = vec![false; n];
    for (no, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 6 || tokens[0] != "edge" {
            return Err(parse_err(no, "expected `edge i j A_ij A_ji b`"));
        }
        let i = parse_node(no, tokens[1], n)?;
        let coeffs = [
            parse_num::<f64>(no, tokens[3], "coefficient")?,
            parse_num::<f64>(no, tokens[4], "coefficient")?,
            parse_num::<f64>(no, tokens[5], "offset")?,
        ];
        if let Some(dummy) = tokens[2].strip_suffix('\'') {
            if parse_node(no, dummy, n)? != i {
                return Err(parse_err(no, "a dummy edge joins a node to its own dummy"));
            }
            if std::mem::replace(&mut dummies[i], true) {
                return Err(parse_err(
                    no,
                    format!("duplicate dummy edge for node {}", i + 1),
                ));
            }
            if coeffs != [DUMMY_COEFFICIENT, DUMMY_SIDE_COEFFICIENT, -s[i]] {
                return Err(parse_err(
                    no,
                    format!("dummy row of node {} has wrong coefficients", i + 1),
                ));
            }
        } else {
            let j = parse_node(no, tokens[2], n)?;
            regular.push((i, j));
            rows.push((no, i, j, coeffs));
        }
    }
    if let Some(i) = dummies.iter().position(|&d| !d) {
        return Err(FormatError::Invalid(format!(
            "missing dummy edge for node {}",
            i + 1
        )));
    }
    let graph = Graph::new(n, regular)?;
    let p = assemble(augment(&graph), s, c, theta)?;
    for (no, i, j, coeffs) in rows {
        let expected = [
            p.public().coefficient(i, j).unwrap_or_default(),
            p.public().coefficient(j, i).unwrap_or_default(),
            p.regular_offset(),
        ];
        if coeffs != expected {
            return Err(parse_err(no, format!("edge row expects {expected:?}")));
        }
    }
    Ok(p)
}

pub fn read_instance(path: &Path) -> Result<ProblemInstance, FormatError> {
    parse_instance(&fs::read_to_string(path)?)
}

/// One row per round `t = 0..=t_max` and node: the auxiliaries `z^(t)` the
/// round started from, the primal `x^(t+1)` it produced and its dummy-edge
/// decision.
pub fn write_trace_csv(trace: &Trace, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "t,node,x,z_to_dummy,z_from_dummy,y_sum,branch")?;
    for state in trace.states() {
        for (i, step) in state.dummy.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                state.t,
                i + 1,
                state.x[i],
                state.z.to_dummy[i],
                state.z.from_dummy[i],
                step.y_sum(),
                if step.exchanged {
                    "exchange"
                } else {
                    "reflect"
                }
            )?;
        }
    }
    Ok(())
}

/// `z_{i|j}^(t)` for every directed regular edge and `t = 0..=t_max + 1`.
pub fn write_edge_csv(trace: &Trace, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "t,i,j,z_i_given_j")?;
    let directed = trace.instance().public().directed();
    for t in 0..=trace.t_max() + 1 {
        let z = trace.z(t);
        for (slot, e) in directed.as_slice().iter().enumerate() {
            writeln!(w, "{},{},{},{}", t, e.from + 1, e.to + 1, z.regular[slot])?;
        }
    }
    Ok(())
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topology_round_trip() {
        let g = Graph::new(4, [(0, 1), (1, 2), (0, 3)]).unwrap();
        let text = format_topology(&g);
        assert_eq!(text, "n=4\n1 2\n1 4\n2 3\n");
        assert_eq!(parse_topology(&text).unwrap(), g);
    }

    #[test]
    fn topology_errors() {
        assert!(parse_topology("3\n1 2\n").is_err());
        assert!(matches!(
            parse_topology("n=3\n0 2\n"),
            Err(FormatError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_topology("n=3\n1 1\n"),
            Err(FormatError::Core(_))
        ));
        assert!(parse_topology("n=3\n1 2 3\n").is_err());
        assert_eq!(
            parse_topology("# ring\nn=3\n\n1 2 # first\n")
                .unwrap()
                .edge_count(),
            1
        );
    }

    #[test]
    fn instance_round_trip() {
        let g = Graph::path(3);
        let p = assemble(augment(&g), vec![0.1, -2.5e-7, 1.0 / 3.0], 1.5, 0.5).unwrap();
        let text = format_instance(&p);
        assert!(text.contains("edge 1 2 1 -1 0\n"));
        assert!(text.contains("edge 2 2' -1 0 0.00000025\n"));
        assert_eq!(parse_instance(&text).unwrap(), p);
    }

    #[test]
    fn instance_rejects_wrong_coefficients() {
        let p = assemble(augment(&Graph::path(2)), vec![0.0, 1.0], 1.0, 0.5).unwrap();
        let text = format_instance(&p);
        let flipped = text.replace("edge 1 2 1 -1 0", "edge 1 2 -1 1 0");
        assert!(matches!(
            parse_instance(&flipped),
            Err(FormatError::Parse { .. })
        ));
        let bad_b = text.replace("edge 2 2' -1 0 -1", "edge 2 2' -1 0 1");
        assert!(parse_instance(&bad_b).is_err());
        let missing = text.replace("edge 1 1' -1 0 -0\n", "");
        assert!(matches!(
            parse_instance(&missing),
            Err(FormatError::Invalid(_))
        ));
    }
}
