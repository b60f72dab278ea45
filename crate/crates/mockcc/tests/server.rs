use govaudit_mockcc::{fixture_crawls, spawn, Page};

fn pages() -> Vec<Page> {
    vec![Page {
        url: "https://www.gov.uk/a".into(),
        timestamp: "20240221103000".into(),
        html: "<html><main><p>Alpha</p></main></html>".into(),
    }]
}

#[test]
fn serves_index_and_ranges() {
    let server = spawn(fixture_crawls(&pages()), 0, vec!["https://www.gov.uk/broken".into()]).unwrap();
    let http = reqwest::blocking::Client::new();
    let info: String = http.get(format!("{}/collinfo.json", server.base_url())).send().unwrap().text().unwrap();
    assert!(info.contains("CC-MAIN-2024-10-index"));

    let cdx = format!("{}/CC-MAIN-2024-10-index", server.base_url());
    let resp = http.get(&cdx).query(&[("url", "https://www.gov.uk/a"), ("output", "json")]).send().unwrap();
    assert_eq!(resp.status(), 200);
    let line: serde_json::Value = serde_json::from_str(resp.text().unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(line["offset"], "0");

    let missing = http.get(&cdx).query(&[("url", "https://www.gov.uk/zzz"), ("output", "json")]).send().unwrap();
    assert_eq!(missing.status(), 404);
    let broken = http.get(&cdx).query(&[("url", "https://www.gov.uk/broken"), ("output", "json")]).send().unwrap();
    assert_eq!(broken.status(), 500);

    let len: usize = line["length"].as_str().unwrap().parse().unwrap();
    let file = line["filename"].as_str().unwrap();
    let body = http
        .get(format!("{}/{file}", server.data_base()))
        .header("Range", format!("bytes=0-{}", len - 1))
        .send()
        .unwrap();
    assert_eq!(body.status(), 206);
    assert_eq!(&body.bytes().unwrap()[..2], &[0x1f, 0x8b]);
}
