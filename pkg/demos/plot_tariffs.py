"""
Building the tariff book
========================

Grid import and EV charging prices follow a wholesale day shape; the
community market sits at the grid export compensation plus the grid-use fee.
"""
import numpy as np

from evflex import TimeGrid, derive_community_tariffs, make_tariff_book

grid = TimeGrid.day(1.0)
book = make_tariff_book(grid)

# hourly prices, EUR/MWh for energy and EUR/h for the charger
for h in range(0, 24, 3):
    print(f"{h:02d}:00  import {book.grid_import[h] * 1000:6.1f}  charging {book.charging[h]:.2f}")
print("mean import", round(book.grid_import.mean() * 1000, 3), "EUR/MWh")

comm = derive_community_tariffs(book)
print("community export", comm.export_comp * 1000, "import", comm.import_price * 1000)

# steps in which buying from the community beats the grid
cheaper = np.flatnonzero(comm.import_price < book.grid_import)
print("community import attractive in", len(cheaper), "of", grid.steps, "hours")
