//! Field dumps: a small header (dimension, points per axis, component count)
//! followed by node values, either little-endian `f64` or text.
//!
//! Binary layout: `b"QLABFLD\0"`, `u32` version, `u32` dim, `u64` points per
//! axis, `u64` components, then each component's node values in row-major order.
//! Text layout: one header line `qlab-field 1 <dim> <points> <components>`
//! followed by one line per node holding its components.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{QlabError, Result};
use crate::field::{ScalarField, SymTensor2Field};
use crate::grid::PeriodicGrid;

const MAGIC: &[u8; 8] = b"QLABFLD\0";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldFormat {
    Binary,
    Text,
}

/// Raw components of a grid field.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDump {
    pub grid: PeriodicGrid,
    pub components: Vec<Vec<f64>>,
}

fn malformed(msg: impl Into<String>) -> QlabError {
    QlabError::MalformedField(msg.into())
}

impl FieldDump {
    pub fn from_scalar(u: &ScalarField) -> Self {
        Self {
            grid: u.grid(),
            components: vec![u.values().to_vec()],
        }
    }

    /// Upper-triangle components in `(0,0), (0,1), …, (n−1,n−1)` order.
    pub fn from_sym_tensor(h: &SymTensor2Field) -> Self {
        Self {
            grid: h.grid(),
            components: h.components().to_vec(),
        }
    }

    pub fn into_scalar(mut self) -> Result<ScalarField> {
        if self.components.len() != 1 {
            return Err(malformed(format!(
                "expected 1 component, found {}",
                self.components.len()
            )));
        }
        ScalarField::new(self.grid, self.components.pop().unwrap_or_default())
    }

    pub fn into_sym_tensor(self) -> Result<SymTensor2Field> {
        SymTensor2Field::from_components(self.grid, self.components)
    }

    pub fn write(&self, w: &mut impl Write, format: FieldFormat) -> Result<()> {
        match format {
            FieldFormat::Binary => self.write_binary(w),
            FieldFormat::Text => self.write_text(w),
        }
    }

    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.grid.points_per_axis() as u64).to_le_bytes())?;
        w.write_all(&(self.components.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.grid.node_count());
        for c in &self.components {
            buf.clear();
            c.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| malformed("truncated header"))?;
        if &magic != MAGIC {
            return Err(malformed("bad magic"));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        let mut u32_at = |r: &mut dyn Read| -> Result<u32> {
            r.read_exact(&mut b4).map_err(|_| malformed("truncated header"))?;
            Ok(u32::from_le_bytes(b4))
        };
        let version = u32_at(r)?;
        if version != VERSION {
            return Err(malformed(format!("unsupported version {version}")));
        }
        let dim = u32_at(r)? as usize;
        let mut u64_at = |r: &mut dyn Read| -> Result<u64> {
            r.read_exact(&mut b8).map_err(|_| malformed("truncated header"))?;
            Ok(u64::from_le_bytes(b8))
        };
        let points = u64_at(r)? as usize;
        let count = u64_at(r)? as usize;
        let grid = PeriodicGrid::new(dim, points)?;
        if count > 64 {
            return Err(malformed(format!("implausible component count {count}")));
        }
        let nodes = grid.node_count();
        let mut raw = vec![0u8; 8 * nodes];
        let mut components = Vec::with_capacity(count);
        for i in 0..count {
            r.read_exact(&mut raw)
                .map_err(|_| malformed(format!("truncated data in component {i}")))?;
            components.push(
                raw.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                    .collect(),
            );
        }
        Ok(Self { grid, components })
    }

    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "qlab-field {VERSION} {} {} {}",
            self.grid.dim(),
            self.grid.points_per_axis(),
            self.components.len()
        )?;
        let mut line = String::new();
        for node in 0..self.grid.node_count() {
            line.clear();
            for (i, c) in self.components.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{:.16e}", c[node]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text(r: &mut impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| malformed("empty input"))??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "qlab-field" {
            return Err(malformed("bad header line"));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| malformed(format!("bad header value {s:?}")))
        };
        if num(parts[1])? != VERSION as usize {
            return Err(malformed(format!("unsupported version {}", parts[1])));
        }
        let grid = PeriodicGrid::new(num(parts[2])?, num(parts[3])?)?;
        let count = num(parts[4])?;
        let mut components = vec![Vec::with_capacity(grid.node_count()); count];
        for node in 0..grid.node_count() {
            let line = lines
                .next()
                .ok_or_else(|| malformed(format!("missing line for node {node}")))??;
            let mut vals = line.split_whitespace();
            for c in components.iter_mut() {
                let v = vals
                    .next()
                    .ok_or_else(|| malformed(format!("node {node}: too few values")))?
                    .parse::<f64>()
                    .map_err(|e| malformed(format!("node {node}: {e}")))?;
                c.push(v);
            }
            if vals.next().is_some() {
                return Err(malformed(format!("node {node}: too many values")));
            }
        }
        Ok(Self { grid, components })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FieldDump {
        let grid = PeriodicGrid::new(3, 8).unwrap();
        let h = SymTensor2Field::from_fn(grid, |x, i, j| (i + 2 * j) as f64 * x[0].sin() + 1.0 / 3.0);
        FieldDump::from_sym_tensor(&h)
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let d = sample();
        let mut buf = Vec::new();
        d.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(buf.len(), 8 + 4 + 4 + 8 + 8 + 8 * 6 * 512);
        assert_eq!(FieldDump::read_binary(&mut buf.as_slice()).unwrap(), d);
        assert!(FieldDump::read_binary(&mut &buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let d = sample();
        let mut buf = Vec::new();
        d.write_text(&mut buf).unwrap();
        let back = FieldDump::read_text(&mut buf.as_slice()).unwrap();
        assert_eq!(back, d);
        assert!(back.into_sym_tensor().is_ok());
    }

    #[test]
    fn scalar_round_trip() {
        let grid = PeriodicGrid::new(2, 8).unwrap();
        let u = ScalarField::from_fn(grid, |x| x[1].cos());
        let mut buf = Vec::new();
        FieldDump::from_scalar(&u).write(&mut buf, FieldFormat::Binary).unwrap();
        assert_eq!(
            FieldDump::read_binary(&mut buf.as_slice())
                .unwrap()
                .into_scalar()
                .unwrap(),
            u
        );
        assert!(FieldDump::read_text(&mut "qlab-field 1 2 8".as_bytes()).is_err());
    }
}
