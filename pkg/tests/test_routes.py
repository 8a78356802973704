# tests/test_routes.py
from services.geometry_service import SeriesId
from services.pattern_service import build_pattern
from services.storage_service import save_packing


def test_api_index(client):
    response = client.get("/api")
    assert response.status_code == 200
    assert "running" in response.get_json()["status"]


def test_unknown_route_uses_envelope(client):
    response = client.get("/api/nothing-here")
    assert response.status_code == 404
    assert response.get_json()["success"] is False


def test_formula(client):
    response = client.get("/api/patterns/halfk/3")
    body = response.get_json()
    assert response.status_code == 200
    assert body["success"] is True
    assert body["data"]["n"] == 10
    assert abs(body["data"]["m"] - 5.0 / 12.0) < 1e-14


def test_formula_for_unknown_series(client):
    assert client.get("/api/patterns/triangle/3").status_code == 404


def test_formula_for_square_minus_3(client):
    assert client.get("/api/patterns/square-minus-3/6").status_code == 400


def test_packing_text(client):
    response = client.get("/api/patterns/square/3/packing?contacts=true")
    text = response.get_data(as_text=True)
    assert response.status_code == 200
    assert response.mimetype == "text/plain"
    assert "n 9\n" in text
    assert text.count("\nbond ") == 12


def test_packing_for_missing_member(client):
    response = client.get("/api/patterns/halfk/8/packing")
    assert response.status_code == 422
    assert "1/2" in response.get_json()["message"]


def test_packing_with_bad_variant(client):
    assert client.get("/api/patterns/square-minus-1/5/packing?variant=1,3").status_code == 400
    assert client.get("/api/patterns/square-minus-1/5/packing?variant=x").status_code == 400


def test_svg(client):
    response = client.get("/api/patterns/oblong/4/svg?labels=false")
    text = response.get_data(as_text=True)
    assert response.status_code == 200
    assert response.mimetype == "image/svg+xml"
    assert text.count("<circle") == 20
    assert "<text" not in text


def test_variants(client):
    body = client.get("/api/patterns/square-minus-2/6/variants").get_json()
    assert len(body["data"]) == 9
    assert "(2,4;2,4)" in body["data"]


def test_analyze_upload(client):
    text = save_packing(build_pattern(SeriesId.SQUARE, 3), with_contacts=True)
    response = client.post("/api/packings/analyze", data=text, content_type="text/plain")
    body = response.get_json()
    assert response.status_code == 200
    assert body["data"]["valid"] is True
    assert body["data"]["provenance"] == "loaded upload"
    assert body["data"]["match"]["series"] == "square"


def test_analyze_rejects_empty_and_malformed(client):
    assert client.post("/api/packings/analyze", data="").status_code == 400
    assert client.post("/api/packings/analyze", data="version 1\nfoo\n").status_code == 400


def test_analyze_rejects_overlap(client):
    text = "version 1\nn 2\nm 2.0\ndisk 0 0 0\ndisk 1 1 1\n"
    assert client.post("/api/packings/analyze", data=text).status_code == 422


def test_series_report(client):
    response = client.get("/api/series/square?k=2..7")
    data = response.get_json()["data"]
    assert response.status_code == 200
    assert [row["n"] for row in data["rows"]] == [4, 9, 16, 25, 36, 49]
    assert data["rows"][5]["challenger_source"] == "missing"
    assert data["n0"] == 36
    assert data["n1"] is None


def test_series_rejects_bad_range(client):
    assert client.get("/api/series/square?k=8..2").status_code == 400
    assert client.get("/api/series/square?k=a..b").status_code == 400
    assert client.get("/api/series/nope").status_code == 404


def test_crossover(client):
    data = client.get("/api/series/oblong/crossover?k=7..8").get_json()["data"]
    assert [(row["k"], row["winner"]) for row in data] == [(7, "main"), (8, "alt")]
