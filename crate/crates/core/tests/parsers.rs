use monodromy_core::hyperlat::BiPoly;
use monodromy_core::permlab::Permutation;
use monodromy_core::tracker::LoopPath;
use monodromy_core::{Error, RatPoly};

fn parse_position(e: Error) -> usize {
    match e {
        Error::Parse { position, .. } => position,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn polynomials_round_trip() {
    for s in ["0,0,1", "1/2,-3,0,7/4", "-5", "0,1,0,0,0,0,0,0,0,0,0,1"] {
        let f: RatPoly = s.parse().unwrap();
        assert_eq!(f.to_string().parse::<RatPoly>().unwrap(), f, "{s}");
    }
    assert_eq!(
        " 1 , 2 ".parse::<RatPoly>().unwrap(),
        RatPoly::from_ints(&[1, 2])
    );
}

#[test]
fn polynomial_errors_point_at_the_token() {
    assert_eq!(parse_position("1,x,3".parse::<RatPoly>().unwrap_err()), 2);
    assert_eq!(parse_position("1,2/0".parse::<RatPoly>().unwrap_err()), 4);
    assert!("".parse::<RatPoly>().is_err());
}

#[test]
fn permutations_round_trip() {
    for s in ["[2,3,1]", "[1]", "[4,3,2,1]"] {
        let p: Permutation = s.parse().unwrap();
        assert_eq!(p.to_string(), s);
    }
    assert_eq!(
        "2, 3, 1".parse::<Permutation>().unwrap().to_string(),
        "[2,3,1]"
    );
    for bad in ["[1,1]", "[0,1]", "[2,3", "[1,3]", "a"] {
        assert!(bad.parse::<Permutation>().is_err(), "{bad}");
    }
}

#[test]
fn bivariate_text_round_trips() {
    for s in ["0;1", "0,1;;2", "1/3,0,1;-1;0,0,5"] {
        let b: BiPoly = s.parse().unwrap();
        assert_eq!(b.to_string().parse::<BiPoly>().unwrap(), b, "{s}");
    }
    assert_eq!(parse_position("1;2,q".parse::<BiPoly>().unwrap_err()), 4);
    assert!("".parse::<BiPoly>().is_err());
}

#[test]
fn loops_parse_and_close() {
    let l = LoopPath::from_json(r#"{"basepoint":[1,0],"vertices":[[0,1],[-1,0]]}"#).unwrap();
    assert_eq!(l.vertices.len(), 4);
    assert_eq!(l.vertices.first(), l.vertices.last());
    let back = LoopPath::from_json(&l.to_json()).unwrap();
    assert_eq!(back, l);
    for bad in [
        "",
        "{",
        r#"{"basepoint":[1],"vertices":[]}"#,
        r#"{"vertices":[]}"#,
    ] {
        assert!(LoopPath::from_json(bad).is_err(), "{bad}");
    }
}
