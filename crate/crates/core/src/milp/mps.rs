//! Fixed-form MPS output.

use std::collections::HashSet;
use std::io::{self, Write};
use std::path::Path;

use crate::model::{MilpInstance, Sense, VarKind};

const OBJ_ROW: &str = "COST";

fn fnv1a(s: &str) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in s.bytes() {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

fn encodable(name: &str) -> bool {
    !name.is_empty() && name.len() <= 8 && name.bytes().all(|b| b.is_ascii_graphic())
}

/// Names of at most eight printable characters, unique within `taken`.
/// Longer names keep four characters plus a 16-bit hash in hex.
fn mps_name(raw: &str, taken: &mut HashSet<String>) -> String {
    if encodable(raw) && taken.insert(raw.to_string()) {
        return raw.to_string();
    }
    let stem: String = raw.chars().filter(|c| c.is_ascii_alphanumeric()).take(4).collect();
    let mut h = fnv1a(raw);
    loop {
        let name = format!("{stem}{:04X}", h & 0xFFFF);
        if taken.insert(name.clone()) {
            return name;
        }
        h = h.wrapping_add(1);
    }
}

/// Shortest decimal text of at most 12 characters that reads back
/// closest to `v`.
fn number(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    let mut candidates = Vec::new();
    for p in (0..=11).rev() {
        let s = format!("{v:.p$e}");
        if s.len() <= 12 {
            candidates.push(s);
            break;
        }
    }
    for p in (0..=11).rev() {
        let s = format!("{v:.p$}");
        if s.len() <= 12 {
            candidates.push(s);
            break;
        }
    }
    candidates
        .into_iter()
        .min_by(|a, b| {
            let ea = (a.parse::<f64>().unwrap_or(f64::INFINITY) - v).abs();
            let eb = (b.parse::<f64>().unwrap_or(f64::INFINITY) - v).abs();
            ea.total_cmp(&eb)
        })
        .unwrap_or(plain)
}

fn entry<W: Write>(w: &mut W, code: &str, name: &str, field: &str, value: Option<f64>) -> io::Result<()> {
    match value {
        Some(v) => writeln!(w, " {code:<2} {name:<8}  {field:<8}  {:>12}", number(v)),
        None => writeln!(w, " {code:<2} {name:<8}  {field}"),
    }
}

pub fn write_mps<W: Write>(instance: &MilpInstance, mut w: W) -> io::Result<()> {
    let mut taken = HashSet::from([OBJ_ROW.to_string()]);
    let row_names: Vec<String> = instance
        .constraints
        .iter()
        .map(|c| mps_name(&c.tag.compact_name(), &mut taken))
        .collect();
    let mut taken_cols = HashSet::new();
    let col_names: Vec<String> = instance
        .variables
        .iter()
        .map(|v| mps_name(&v.name, &mut taken_cols))
        .collect();

    writeln!(w, "NAME          HPDRO")?;
    writeln!(w, "ROWS")?;
    writeln!(w, " N  {OBJ_ROW}")?;
    for (c, name) in instance.constraints.iter().zip(&row_names) {
        let code = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        writeln!(w, " {code}  {name}")?;
    }

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); instance.variables.len()];
    for (i, c) in instance.constraints.iter().enumerate() {
        for &(j, a) in &c.coeffs {
            cols[j].push((i, a));
        }
    }
    writeln!(w, "COLUMNS")?;
    let mut in_int = false;
    for (j, var) in instance.variables.iter().enumerate() {
        let is_int = var.kind == VarKind::Binary;
        if is_int != in_int {
            let tag = if is_int { "'INTORG'" } else { "'INTEND'" };
            writeln!(w, "    MARKER    'MARKER'                 {tag}")?;
            in_int = is_int;
        }
        let name = &col_names[j];
        let c = instance.objective[j];
        if c != 0.0 || cols[j].is_empty() {
            entry(&mut w, "", name, OBJ_ROW, Some(c))?;
        }
        for &(i, a) in &cols[j] {
            entry(&mut w, "", name, &row_names[i], Some(a))?;
        }
    }
    if in_int {
        writeln!(w, "    MARKER    'MARKER'                 'INTEND'")?;
    }

    writeln!(w, "RHS")?;
    for (c, name) in instance.constraints.iter().zip(&row_names) {
        if c.rhs != 0.0 {
            entry(&mut w, "", "RHS", name, Some(c.rhs))?;
        }
    }

    writeln!(w, "BOUNDS")?;
    for (var, name) in instance.variables.iter().zip(&col_names) {
        if var.kind == VarKind::Binary && var.lower == 0.0 && var.upper == 1.0 {
            entry(&mut w, "BV", "BND", name, None)?;
            continue;
        }
        if var.lower == var.upper {
            entry(&mut w, "FX", "BND", name, Some(var.lower))?;
            continue;
        }
        if var.lower == f64::NEG_INFINITY {
            if var.upper == f64::INFINITY {
                entry(&mut w, "FR", "BND", name, None)?;
                continue;
            }
            entry(&mut w, "MI", "BND", name, None)?;
        } else if var.lower != 0.0 {
            entry(&mut w, "LO", "BND", name, Some(var.lower))?;
        }
        if var.upper.is_finite() {
            entry(&mut w, "UP", "BND", name, Some(var.upper))?;
        }
    }
    writeln!(w, "ENDATA")?;
    Ok(())
}

/// Writes the instance to `path`, replacing any previous file atomically.
pub fn export_mps(instance: &MilpInstance, path: &Path) -> io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write_mps(instance, io::BufWriter::new(tmp.as_file_mut()))?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_deterministic, BuildOptions, ForecastSet, Variable, Variant, ZoneSpec};
    use crate::thermal::HouseSpec;

    #[test]
    fn numbers_fit_their_field() {
        for v in [
            0.0,
            1.0,
            -3.5,
            1.0 / 3.0,
            -2.0 / 3.0 * 1e-7,
            123456789.123,
            1e300,
            -1e-300,
        ] {
            let s = number(v);
            assert!(s.len() <= 12, "{s}");
            let back: f64 = s.parse().unwrap();
            assert!((back - v).abs() <= 1e-6 * v.abs(), "{v} -> {s}");
        }
    }

    #[test]
    fn long_names_are_hashed_deterministically() {
        let mut a = HashSet::new();
        let mut b = HashSet::new();
        let n1 = mps_name("a rather long name", &mut a);
        assert_eq!(n1.len(), 8);
        assert_eq!(n1, mps_name("a rather long name", &mut b));
        // a collision bumps the hash
        let n2 = mps_name("a rather long name", &mut a);
        assert_ne!(n1, n2);
        assert_eq!(mps_name("SHORT", &mut a), "SHORT");
    }

    #[test]
    fn empty_instance_is_valid() {
        let inst = MilpInstance {
            variant: Variant::Deterministic,
            variables: vec![Variable {
                name: "Y".into(),
                kind: VarKind::Continuous,
                lower: 0.0,
                upper: 2.0,
            }],
            objective: vec![1.0],
            constraints: vec![],
            layout: None,
        };
        let mut out = Vec::new();
        write_mps(&inst, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let rows: Vec<&str> = text
            .lines()
            .skip_while(|l| *l != "ROWS")
            .skip(1)
            .take_while(|l| l.starts_with(' '))
            .collect();
        assert_eq!(rows, vec![" N  COST"]);
        assert!(text.ends_with("ENDATA\n"));
    }

    #[test]
    fn binaries_are_marked() {
        let houses: Vec<HouseSpec> = HouseSpec::reference_fleet().into_iter().take(2).collect();
        let zones = vec![ZoneSpec {
            name: "z".into(),
            houses: vec![1, 2],
            trans_capacity: 60.0,
            psi: 10.0,
        }];
        let forecast = ForecastSet {
            t_out: vec![0.0; 6],
            net_load: vec![vec![2.0; 6]],
            price: vec![1.0; 6],
            dt: 0.5,
        };
        let inst = build_deterministic(&houses, &zones, &forecast, BuildOptions::default()).unwrap();
        let mut out = Vec::new();
        write_mps(&inst, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with(" BV ")).count(), 12);
        assert_eq!(text.matches("'INTORG'").count(), 1);
        assert_eq!(text.matches("'INTEND'").count(), 1);
        assert!(text.lines().all(|l| l.len() <= 61));
    }
}
