use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::{generate_hex_mesh, generate_square_mesh, generate_voronoi_mesh, read_mesh, PolygonalMesh};
use crate::error::{Result, VemError};

/// Lloyd iterations used for Voronoi levels unless configured otherwise.
pub const DEFAULT_LLOYD_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFamily {
    Square,
    Hex,
    Voronoi,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 3] = [MeshFamily::Square, MeshFamily::Hex, MeshFamily::Voronoi];

    pub fn name(&self) -> &'static str {
        match self {
            MeshFamily::Square => "square",
            MeshFamily::Hex => "hex",
            MeshFamily::Voronoi => "voronoi",
        }
    }

    /// Level `n` of the family. Voronoi levels use `n²` seeds drawn with
    /// `seed + n`.
    pub fn generate(&self, n: usize, seed: u64, lloyd_iterations: usize) -> Result<PolygonalMesh> {
        match self {
            MeshFamily::Square => generate_square_mesh(n),
            MeshFamily::Hex => generate_hex_mesh(n),
            MeshFamily::Voronoi => generate_voronoi_mesh(n * n, lloyd_iterations, seed.wrapping_add(n as u64)),
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshFamily {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "square" => Ok(MeshFamily::Square),
            "hex" => Ok(MeshFamily::Hex),
            "voronoi" => Ok(MeshFamily::Voronoi),
            other => Err(VemError::InvalidInput(format!("unknown mesh family `{other}`"))),
        }
    }
}

/// A generated family level or a mesh file, as given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshSource {
    Family(MeshFamily),
    File(PathBuf),
}

impl MeshSource {
    pub fn load(&self, n: usize, seed: u64, lloyd_iterations: usize) -> Result<PolygonalMesh> {
        match self {
            MeshSource::Family(f) => f.generate(n, seed, lloyd_iterations),
            MeshSource::File(p) => {
                let file = std::fs::File::open(p)?;
                read_mesh(std::io::BufReader::new(file))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            MeshSource::Family(f) => f.name().to_string(),
            MeshSource::File(p) => format!("file:{}", p.display()),
        }
    }
}

impl FromStr for MeshSource {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("file:") {
            Some(p) if !p.is_empty() => Ok(MeshSource::File(PathBuf::from(p))),
            Some(_) => Err(VemError::InvalidInput("empty mesh file path".into())),
            None => s.parse().map(MeshSource::Family),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_sources() {
        assert_eq!("hex".parse::<MeshSource>().unwrap(), MeshSource::Family(MeshFamily::Hex));
        assert_eq!(
            "file:a/b.mesh".parse::<MeshSource>().unwrap(),
            MeshSource::File(PathBuf::from("a/b.mesh"))
        );
        assert!("file:".parse::<MeshSource>().is_err());
        assert!("triangle".parse::<MeshSource>().is_err());
    }

    #[test]
    fn voronoi_levels_are_reproducible() {
        let a = MeshFamily::Voronoi.generate(3, 5, 10).unwrap();
        let b = MeshFamily::Voronoi.generate(3, 5, 10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_polygons(), 9);
    }
}
