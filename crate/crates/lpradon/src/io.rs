use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use crate::error::Error;
use crate::grid::{CmpGather, RegularGrid2};
use crate::synth::{EventSpec, Wavelet};
use crate::Result;

const RSG_MAGIC: &[u8; 4] = b"RSG1";
const MAX_DIM: u32 = 1 << 24;

/// Write a regularly sampled field: magic "RSG1", u32 n1, u32 n2,
/// f64 o1, d1, o2, d2, then n1·n2 float32 samples, axis-1 fastest,
/// all little-endian.
pub fn write_rsg(path: &Path, grid: &RegularGrid2, data: &Array2<f64>) -> Result<()> {
    if data.dim() != (grid.n1, grid.n2) {
        return Err(Error::config("field shape does not match grid".to_string()));
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(RSG_MAGIC)?;
    w.write_u32::<LittleEndian>(grid.n1 as u32)?;
    w.write_u32::<LittleEndian>(grid.n2 as u32)?;
    w.write_f64::<LittleEndian>(grid.o1)?;
    w.write_f64::<LittleEndian>(grid.d1)?;
    w.write_f64::<LittleEndian>(grid.o2)?;
    w.write_f64::<LittleEndian>(grid.d2)?;
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            w.write_f32::<LittleEndian>(data[(i, j)] as f32)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read an RSG file back into a grid and a 64-bit field.
pub fn read_rsg(path: &Path) -> Result<(RegularGrid2, Array2<f64>)> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::format(format!("{}: truncated header", path.display())))?;
    if &magic != RSG_MAGIC {
        return Err(Error::format(format!("{}: bad magic", path.display())));
    }
    let n1 = r.read_u32::<LittleEndian>()?;
    let n2 = r.read_u32::<LittleEndian>()?;
    if n1 < 2 || n2 < 2 || n1 > MAX_DIM || n2 > MAX_DIM {
        return Err(Error::format(format!("{}: bad dimensions {n1}x{n2}", path.display())));
    }
    let o1 = r.read_f64::<LittleEndian>()?;
    let d1 = r.read_f64::<LittleEndian>()?;
    let o2 = r.read_f64::<LittleEndian>()?;
    let d2 = r.read_f64::<LittleEndian>()?;
    let grid = RegularGrid2::new(n1 as usize, n2 as usize, o1, d1, o2, d2)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    let mut data = grid.zeros();
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            data[(i, j)] = r
                .read_f32::<LittleEndian>()
                .map_err(|_| Error::format(format!("{}: truncated payload", path.display())))?
                as f64;
        }
    }
    Ok((grid, data))
}

/// Read a gather from CSV: each row one time sample across traces. An
/// optional first line "#t0=…,dt=…,x0=…,dx=…" carries the grid; unit
/// steps are assumed otherwise.
pub fn read_csv_gather(path: &Path) -> Result<CmpGather> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut meta = (0.0, 1.0, 0.0, 1.0);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            for part in rest.split(',') {
                let mut kv = part.splitn(2, '=');
                let key = kv.next().unwrap_or("").trim();
                let val = kv.next().and_then(|v| v.trim().parse::<f64>().ok());
                match (key, val) {
                    ("t0", Some(v)) => meta.0 = v,
                    ("dt", Some(v)) => meta.1 = v,
                    ("x0", Some(v)) => meta.2 = v,
                    ("dx", Some(v)) => meta.3 = v,
                    _ => {}
                }
            }
            continue;
        }
        let row: Vec<f64> = trimmed
            .split(',')
            .map(|c| {
                c.trim().parse::<f64>().map_err(|_| {
                    Error::format(format!(
                        "{}: line {}: non-numeric cell '{}'",
                        path.display(),
                        lineno + 1,
                        c.trim()
                    ))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::format(format!(
                    "{}: line {}: ragged row ({} cells, expected {})",
                    path.display(),
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.len() < 2 || rows[0].len() < 2 {
        return Err(Error::format(format!("{}: gather needs at least 2x2 samples", path.display())));
    }
    let grid = RegularGrid2::new(rows.len(), rows[0].len(), meta.0, meta.1, meta.2, meta.3)?;
    let mut data = grid.zeros();
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            data[(i, j)] = v;
        }
    }
    CmpGather::new(grid, data)
}

/// Write a gather as CSV with the grid metadata comment.
pub fn write_csv_gather(path: &Path, gather: &CmpGather) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let g = &gather.grid;
    writeln!(w, "#t0={},dt={},x0={},dx={}", g.o1, g.d1, g.o2, g.d2)?;
    for i in 0..g.n1 {
        let row: Vec<String> = (0..g.n2).map(|j| format!("{}", gather.data[(i, j)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Render a field as 16-bit grayscale PGM, symmetric linear mapping
/// clipped at the given percentile of |data|; rows follow axis 1.
pub fn render_pgm(path: &Path, data: &Array2<f64>, clip_percentile: f64) -> Result<()> {
    if !(clip_percentile > 50.0 && clip_percentile <= 100.0) {
        return Err(Error::config(format!(
            "clip percentile must lie in (50, 100], got {clip_percentile}"
        )));
    }
    let (n1, n2) = data.dim();
    let mut mags: Vec<f64> = data.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((clip_percentile / 100.0 * mags.len() as f64).ceil() as usize)
        .clamp(1, mags.len())
        - 1;
    let clip = mags[idx];

    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "P5")?;
    writeln!(w, "{n2} {n1}")?;
    writeln!(w, "65535")?;
    for i in 0..n1 {
        for j in 0..n2 {
            let unit = if clip > 0.0 {
                (data[(i, j)] / clip).clamp(-1.0, 1.0) * 0.5 + 0.5
            } else {
                0.5
            };
            let pix = (unit * 65535.0).round() as u16;
            // PGM stores 16-bit samples most significant byte first.
            w.write_all(&pix.to_be_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a mute boundary polyline: one "tau q" pair per line, strictly
/// increasing τ; '#' starts a comment.
pub fn read_mute_polyline(path: &Path) -> Result<Vec<(f64, f64)>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut pts = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::format(format!(
                "{}: line {}: expected 'tau q'",
                path.display(),
                lineno + 1
            )));
        }
        let tau: f64 = fields[0].parse().map_err(|_| {
            Error::format(format!("{}: line {}: bad tau", path.display(), lineno + 1))
        })?;
        let q: f64 = fields[1].parse().map_err(|_| {
            Error::format(format!("{}: line {}: bad q", path.display(), lineno + 1))
        })?;
        if let Some(&(prev, _)) = pts.last() {
            if tau <= prev {
                return Err(Error::format(format!(
                    "{}: line {}: tau must be strictly increasing",
                    path.display(),
                    lineno + 1
                )));
            }
        }
        pts.push((tau, q));
    }
    if pts.is_empty() {
        return Err(Error::format(format!("{}: empty polyline", path.display())));
    }
    Ok(pts)
}

/// Read an event list: one "tau0 q0 amp freq" per line, '#' comments.
pub fn read_event_specs(path: &Path) -> Result<Vec<EventSpec>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut events = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::format(format!(
                "{}: line {}: expected 'tau0 q0 amp freq'",
                path.display(),
                lineno + 1
            )));
        }
        let nums: Vec<f64> = fields
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::format(format!(
                        "{}: line {}: non-numeric field '{f}'",
                        path.display(),
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<_>>()?;
        events.push(EventSpec {
            tau0: nums[0],
            q: nums[1],
            amplitude: nums[2],
            freq: nums[3],
            wavelet: Wavelet::Ricker,
            polarity: 1.0,
        });
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn tmpfile(dir: &tempfile::TempDir, name: &str) -> std::path::PathBuf {
        dir.path().join(name)
    }

    #[test]
    fn rsg_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmpfile(&dir, "a.rsg");
        let grid = RegularGrid2::new(7, 5, 0.0, 0.004, 0.0, 12.5).unwrap();
        let mut data = grid.zeros();
        let mut c = 0.37f32;
        for v in data.iter_mut() {
            // Values representable in f32, so the round trip is exact.
            *v = c as f64;
            c = -1.7 * c + 0.11;
        }
        write_rsg(&path, &grid, &data).unwrap();
        let (grid2, data2) = read_rsg(&path).unwrap();
        assert_eq!(grid, grid2);
        for (a, b) in data.iter().zip(data2.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rsg_layout_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmpfile(&dir, "b.rsg");
        let grid = RegularGrid2::new(2, 2, 0.0, 1.0, 0.0, 1.0).unwrap();
        let mut data = grid.zeros();
        data[(0, 0)] = 1.0;
        data[(1, 0)] = 2.0;
        data[(0, 1)] = 3.0;
        data[(1, 1)] = 4.0;
        write_rsg(&path, &grid, &data).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"RSG1");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..20], &0f64.to_le_bytes());
        assert_eq!(&bytes[20..28], &1f64.to_le_bytes());
        // Samples follow axis 1 fastest: 1, 2, 3, 4.
        assert_eq!(&bytes[44..48], &1f32.to_le_bytes());
        assert_eq!(&bytes[48..52], &2f32.to_le_bytes());
        assert_eq!(&bytes[52..56], &3f32.to_le_bytes());
        assert_eq!(&bytes[56..60], &4f32.to_le_bytes());
        assert_eq!(bytes.len(), 60);
    }

    #[test]
    fn rsg_rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let bad_magic = tmpfile(&dir, "bad.rsg");
        std::fs::write(&bad_magic, b"NOPE").unwrap();
        assert!(matches!(read_rsg(&bad_magic), Err(Error::Format(_))));

        let truncated = tmpfile(&dir, "trunc.rsg");
        let grid = RegularGrid2::new(4, 4, 0.0, 1.0, 0.0, 1.0).unwrap();
        write_rsg(&truncated, &grid, &grid.zeros()).unwrap();
        let bytes = std::fs::read(&truncated).unwrap();
        std::fs::write(&truncated, &bytes[..bytes.len() - 7]).unwrap();
        assert!(matches!(read_rsg(&truncated), Err(Error::Format(_))));

        assert!(read_rsg(&tmpfile(&dir, "missing.rsg")).is_err());
    }

    #[test]
    fn csv_round_trip_with_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmpfile(&dir, "g.csv");
        let grid = RegularGrid2::new(4, 3, 0.0, 0.25, 0.0, 0.5).unwrap();
        let mut data = grid.zeros();
        for (k, v) in data.iter_mut().enumerate() {
            *v = k as f64 * 0.125 - 1.0;
        }
        let g = CmpGather::new(grid, data).unwrap();
        write_csv_gather(&path, &g).unwrap();
        let g2 = read_csv_gather(&path).unwrap();
        assert_eq!(g.grid, g2.grid);
        for (a, b) in g.data.iter().zip(g2.data.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let ragged = tmpfile(&dir, "ragged.csv");
        let mut f = std::fs::File::create(&ragged).unwrap();
        writeln!(f, "1,2,3").unwrap();
        writeln!(f, "4,5").unwrap();
        drop(f);
        match read_csv_gather(&ragged) {
            Err(Error::Format(msg)) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }

        let bad = tmpfile(&dir, "bad.csv");
        std::fs::write(&bad, "1,2\nx,4\n").unwrap();
        match read_csv_gather(&bad) {
            Err(Error::Format(msg)) => assert!(msg.contains("non-numeric"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn pgm_render_is_deterministic_with_midgray_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmpfile(&dir, "img.pgm");
        let mut data = Array2::<f64>::zeros((3, 4));
        data[(0, 0)] = 2.0;
        data[(2, 3)] = -2.0;
        render_pgm(&path, &data, 100.0).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P5\n4 3\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let px = |i: usize| {
            let o = header.len() + 2 * i;
            u16::from_be_bytes([bytes[o], bytes[o + 1]])
        };
        assert_eq!(px(0), 65535); // +clip
        assert_eq!(px(11), 0); // -clip
        assert_eq!(px(5), 32768); // zero maps to mid-gray
        let again = tmpfile(&dir, "img2.pgm");
        render_pgm(&again, &data, 100.0).unwrap();
        assert_eq!(bytes, std::fs::read(&again).unwrap());
        assert!(render_pgm(&path, &data, 40.0).is_err());
    }

    #[test]
    fn mute_polyline_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmpfile(&dir, "mute.txt");
        std::fs::write(&path, "# boundary\n0.2 0.3\n0.6 0.55 # knee\n1.0 0.8\n").unwrap();
        let pts = read_mute_polyline(&path).unwrap();
        assert_eq!(pts, vec![(0.2, 0.3), (0.6, 0.55), (1.0, 0.8)]);

        std::fs::write(&path, "0.5 0.3\n0.5 0.4\n").unwrap();
        assert!(read_mute_polyline(&path).is_err());
        std::fs::write(&path, "0.5\n").unwrap();
        assert!(read_mute_polyline(&path).is_err());
        std::fs::write(&path, "# nothing\n").unwrap();
        assert!(read_mute_polyline(&path).is_err());
    }

    #[test]
    fn event_spec_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmpfile(&dir, "events.txt");
        std::fs::write(&path, "# tau q amp freq\n0.3 0.35 1.0 12\n0.7 0.45 -0.9 12\n").unwrap();
        let evs = read_event_specs(&path).unwrap();
        assert_eq!(evs.len(), 2);
        assert_eq!(evs[1].amplitude, -0.9);
        assert_eq!(evs[0].wavelet, Wavelet::Ricker);

        std::fs::write(&path, "0.3 0.35 1.0\n").unwrap();
        assert!(read_event_specs(&path).is_err());
        std::fs::write(&path, "0.3 oops 1.0 12\n").unwrap();
        match read_event_specs(&path) {
            Err(Error::Format(msg)) => assert!(msg.contains("line 1"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
